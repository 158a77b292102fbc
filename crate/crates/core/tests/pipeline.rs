mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use urban_perception::analysis::{count_points, z_scores, NeighborhoodSpec};
use urban_perception::config::{PipelineConfig, StdDivisor};
use urban_perception::corpus_io::{cluster_points, load_corpus, write_corpus, RawRecord};
use urban_perception::extract::{extract_perceptions, semantic_score, StageReport};
use urban_perception::preprocess::{normalize, preprocess_corpus};
use urban_perception::synth::{fuzz_geo_corpus, sample_lexicons};

use common::{train_planted, Trained};

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| train_planted(3000, 11, 1, 4))
}

fn sample_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

fn run(records: &[RawRecord]) -> (Vec<urban_perception::extract::PerceptionCluster>, StageReport) {
    let t = trained();
    let docs = preprocess_corpus(records, &t.lexicons);
    extract_perceptions(docs, &t.dictionary, &t.model, &PipelineConfig::default()).unwrap()
}

fn assert_monotone(report: &StageReport) {
    assert!(report.is_monotone(), "{report:?}");
    assert!(report.clustered <= report.semantic_filtered, "{report:?}");
}

#[test]
fn stage_counts_never_grow_on_fuzzed_corpora() {
    for seed in 0..50 {
        let (clusters, report) = run(&fuzz_geo_corpus(seed, 300));
        assert_monotone(&report);
        let members: usize = clusters.iter().map(|c| c.members.len()).sum();
        assert_eq!(members, report.clustered);
    }
}

#[test]
fn stage_counts_never_grow_on_sample() {
    let loaded = load_corpus(&sample_dir().join("geo.jsonl"), true).unwrap();
    assert!(loaded.rejected.is_empty());
    let (clusters, report) = run(&loaded.records);
    assert_monotone(&report);
    assert!(
        report.documents > report.spatial_filtered,
        "the sample contains a bot location"
    );
    assert!(!clusters.is_empty());
}

#[test]
fn cluster_members_keep_labels_and_scores() {
    let t = trained();
    let labels: BTreeSet<&str> = t.dictionary.labels().collect();
    let (clusters, _) = run(&fuzz_geo_corpus(7, 400));
    assert!(!clusters.is_empty());
    for c in &clusters {
        assert!(c.members.len() >= 5);
        for m in &c.members {
            assert!(!m.labels.is_empty());
            assert!(m.labels.iter().all(|l| labels.contains(l.as_str())));
            let score = semantic_score(m, &t.model, &t.dictionary).unwrap();
            assert_eq!(score, m.semantic_score);
            assert!(score > 18.0);
        }
    }
}

#[test]
fn empty_corpus_gives_zero_counts() {
    let (clusters, report) = run(&[]);
    assert!(clusters.is_empty());
    assert_eq!(report, StageReport::default());
    let hoods = vec![
        NeighborhoodSpec::from_bbox("west", -87.7, 41.8, -87.6, 41.9).unwrap(),
        NeighborhoodSpec::from_bbox("east", -87.6, 41.8, -87.5, 41.9).unwrap(),
    ];
    let categories: Vec<String> = trained().dictionary.labels().map(String::from).collect();
    let tensor = count_points(&cluster_points(&clusters), &hoods, &categories);
    assert_eq!(tensor.total(), 0);
    let z = z_scores(&tensor, StdDivisor::Population).unwrap();
    assert!(z.entries.iter().all(|e| e.z == 0.0));
}

fn record() -> impl Strategy<Value = RawRecord> {
    (
        "[ -~]{0,40}",
        0i64..2_000_000_000,
        proptest::option::of((-89.0f64..89.0, -179.0f64..179.0)),
    )
        .prop_map(|(text, timestamp, geo)| RawRecord {
            id: String::new(),
            text,
            timestamp,
            lat: geo.map(|g| g.0),
            lon: geo.map(|g| g.1),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_roundtrips_through_disk(mut records in proptest::collection::vec(record(), 0..20)) {
        for (i, r) in records.iter_mut().enumerate() {
            r.id = format!("id{i}");
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        write_corpus(&records, &path).unwrap();
        let loaded = load_corpus(&path, false).unwrap();
        prop_assert!(loaded.rejected.is_empty());
        for r in &mut records {
            r.text = r.text.to_lowercase();
        }
        prop_assert_eq!(loaded.records, records);
    }

    #[test]
    fn normalize_is_idempotent(text in "[ -~\\n]{0,120}") {
        let lex = sample_lexicons();
        let once = normalize(&text, &lex);
        let joined = once.iter().map(|s| s.surfaces.join(" ")).collect::<Vec<_>>().join(". ");
        prop_assert_eq!(normalize(&joined, &lex), once);
    }
}
