//! Regenerate the bundled sample under `data/sample/`.
//!
//! cargo run --example make_sample [-- OUT_DIR]

use std::fs;
use std::path::PathBuf;

use urban_perception::corpus_io::{write_corpus, write_lexicons};
use urban_perception::synth::{
    planted_reviews, sample_external_points, sample_geo_corpus, sample_lexicons, sample_neighborhoods,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample"));
    fs::create_dir_all(out.join("lexicons"))?;

    write_lexicons(&sample_lexicons(), &out.join("lexicons"))?;
    write_corpus(&planted_reviews(3000, 11).records, &out.join("reviews.jsonl"))?;
    write_corpus(&sample_geo_corpus(5), &out.join("geo.jsonl"))?;

    let mut hoods = serde_json::to_string_pretty(&sample_neighborhoods())?;
    hoods.push('\n');
    fs::write(out.join("neighborhoods.geojson"), hoods)?;

    let mut csv = String::from("label,lat,lon\n");
    for (label, p) in sample_external_points(9) {
        csv.push_str(&format!("{label},{:.6},{:.6}\n", p.lat, p.lon));
    }
    fs::write(out.join("external_points.csv"), csv)?;
    println!("sample written to {}", out.display());
    Ok(())
}
