//! Seeded synthetic corpora with planted structure, used by the bundled
//! sample and by the test suites.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

use crate::corpus_io::{LexiconBundle, RawRecord};
use crate::geo::{GeoPoint, EARTH_RADIUS_M};

pub const POSITIVE_WORDS: [&str; 8] = [
    "lovely",
    "charming",
    "delightful",
    "gorgeous",
    "pleasant",
    "splendid",
    "cozy",
    "stunning",
];
pub const NEGATIVE_WORDS: [&str; 8] = [
    "filthy", "gloomy", "grim", "shabby", "dreary", "sinister", "eerie", "dingy",
];
const POSITIVE_SCORES: [f64; 8] = [0.7, 0.6, 0.8, 0.7, 0.5, 0.7, 0.5, 0.8];
const NEGATIVE_SCORES: [f64; 8] = [-0.7, -0.5, -0.6, -0.5, -0.6, -0.7, -0.5, -0.6];

/// Adjectives with no planted structure.
pub const NOISE_WORDS: [&str; 20] = [
    "busy", "quiet", "small", "large", "old", "new", "modern", "narrow", "wide", "local", "open", "crowded", "famous",
    "typical", "urban", "central", "public", "historic", "tall", "empty",
];

const POSITIVE_NOUNS: [&str; 6] = ["garden", "fountain", "terrace", "sunset", "flowers", "patio"];
const NEGATIVE_NOUNS: [&str; 6] = ["alley", "garbage", "graffiti", "shadows", "trash", "underpass"];
const SHARED_NOUNS: [&str; 20] = [
    "park", "street", "place", "area", "square", "market", "bridge", "station", "building", "plaza", "river", "museum",
    "cafe", "block", "road", "corner", "lake", "tower", "church", "school",
];
const GLUE: [&str; 8] = ["the", "was", "and", "a", "is", "very", "with", "this"];

const STOPWORDS: &str = "a about above after again against all am an and any are as at be because been before \
being below between both but by can could did do does doing down during each few for from further had has have \
having he her here hers herself him himself his how i if in into is it its itself just me more most my myself no \
nor not now of off on once only or other our ours ourselves out over own same she should so some such than that \
the their theirs them themselves then there these they this those through to too under until up very was we were \
what when where which while who whom why will with would you your yours yourself yourselves";

const CONTRACTIONS: [(&str, &str); 16] = [
    ("aren't", "are not"),
    ("can't", "cannot"),
    ("couldn't", "could not"),
    ("didn't", "did not"),
    ("doesn't", "does not"),
    ("don't", "do not"),
    ("isn't", "is not"),
    ("it's", "it is"),
    ("i'm", "i am"),
    ("i've", "i have"),
    ("let's", "let us"),
    ("that's", "that is"),
    ("there's", "there is"),
    ("wasn't", "was not"),
    ("won't", "will not"),
    ("you're", "you are"),
];

/// Extra general-purpose sentiment entries so the lexicon is not only the planted words.
const GENERAL_SENTIMENT: [(&str, f64); 18] = [
    ("great", 0.6),
    ("good", 0.4),
    ("nice", 0.4),
    ("beautiful", 0.7),
    ("amazing", 0.7),
    ("awesome", 0.6),
    ("safe", 0.4),
    ("lively", 0.3),
    ("bad", -0.5),
    ("terrible", -0.8),
    ("awful", -0.8),
    ("dirty", -0.5),
    ("dangerous", -0.6),
    ("creepy", -0.6),
    ("boring", -0.4),
    ("dead", -0.4),
    ("scary", -0.5),
    ("ugly", -0.6),
];

/// Lexicons covering the synthetic vocabulary plus a handful of common words.
pub fn sample_lexicons() -> LexiconBundle {
    let mut sentiment: BTreeMap<String, f64> = GENERAL_SENTIMENT.iter().map(|&(w, s)| (w.to_string(), s)).collect();
    for (w, s) in POSITIVE_WORDS.iter().zip(POSITIVE_SCORES) {
        sentiment.insert(w.to_string(), s);
    }
    for (w, s) in NEGATIVE_WORDS.iter().zip(NEGATIVE_SCORES) {
        sentiment.insert(w.to_string(), s);
    }
    let adjectives = POSITIVE_WORDS
        .iter()
        .chain(&NEGATIVE_WORDS)
        .chain(&NOISE_WORDS)
        .copied()
        .chain(GENERAL_SENTIMENT.iter().map(|&(w, _)| w))
        .map(String::from)
        .collect();
    LexiconBundle {
        stopwords: STOPWORDS.split_whitespace().map(String::from).collect(),
        contractions: CONTRACTIONS
            .iter()
            .map(|&(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        sentiment,
        adjectives,
    }
}

#[derive(Debug, Clone, Copy)]
enum Topic {
    Positive,
    Negative,
    Plain,
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str], n: usize) -> Vec<&'a str> {
    words.choose_multiple(rng, n).copied().collect()
}

fn sentence(rng: &mut ChaCha8Rng, topic: Topic) -> String {
    let mut words: Vec<&str> = match topic {
        Topic::Positive => [
            pick(rng, &POSITIVE_WORDS, 3),
            pick(rng, &POSITIVE_NOUNS, 2),
            pick(rng, &SHARED_NOUNS, 1),
        ]
        .concat(),
        Topic::Negative => [
            pick(rng, &NEGATIVE_WORDS, 3),
            pick(rng, &NEGATIVE_NOUNS, 2),
            pick(rng, &SHARED_NOUNS, 1),
        ]
        .concat(),
        Topic::Plain => {
            let n = rng.random_range(1..=2);
            [pick(rng, &NOISE_WORDS, n), pick(rng, &SHARED_NOUNS, 4)].concat()
        }
    };
    if !matches!(topic, Topic::Plain) && rng.random_bool(0.1) {
        words.push(NOISE_WORDS.choose(rng).expect("non-empty"));
    }
    words.shuffle(rng);
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
            if rng.random_bool(0.5) {
                out.push_str(GLUE.choose(rng).expect("non-empty"));
                out.push(' ');
            }
        }
        out.push_str(w);
    }
    out.push(*['.', '!', '.'].choose(rng).expect("non-empty"));
    out
}

fn topic(rng: &mut ChaCha8Rng) -> Topic {
    match rng.random_range(0..10) {
        0..=2 => Topic::Positive,
        3..=5 => Topic::Negative,
        _ => Topic::Plain,
    }
}

#[derive(Debug, Clone)]
pub struct PlantedReviews {
    pub records: Vec<RawRecord>,
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
    pub noise: BTreeSet<String>,
}

/// Reviews in which the positive and the negative word groups each co-occur
/// among themselves, while the noise adjectives appear with random nouns.
pub fn planted_reviews(count: usize, seed: u64) -> PlantedReviews {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = 1_514_764_800; // 2018-01-01T00:00:00Z
    let records = (0..count)
        .map(|i| {
            let sentences: Vec<String> = (0..rng.random_range(2..=3))
                .map(|_| {
                    let t = topic(&mut rng);
                    sentence(&mut rng, t)
                })
                .collect();
            RawRecord {
                id: format!("r{i:05}"),
                text: sentences.join(" "),
                timestamp: base + i as i64 * 600,
                lat: None,
                lon: None,
            }
        })
        .collect();
    let set = |words: &[&str]| words.iter().map(|w| w.to_string()).collect();
    PlantedReviews {
        records,
        positive: set(&POSITIVE_WORDS),
        negative: set(&NEGATIVE_WORDS),
        noise: set(&NOISE_WORDS),
    }
}

/// Point `east_m` meters east and `north_m` meters north of `origin`.
pub fn offset(origin: GeoPoint, east_m: f64, north_m: f64) -> GeoPoint {
    let m_per_deg = EARTH_RADIUS_M.to_radians();
    GeoPoint::new(
        origin.lat + north_m / m_per_deg,
        origin.lon + east_m / (m_per_deg * origin.lat.to_radians().cos()),
    )
}

/// Isotropic Gaussian cloud with standard deviation `sigma_m` meters.
pub fn gaussian_blob(rng: &mut impl Rng, center: GeoPoint, sigma_m: f64, n: usize) -> Vec<GeoPoint> {
    let normal = Normal::new(0.0, sigma_m).expect("finite sigma");
    (0..n)
        .map(|_| offset(center, normal.sample(rng), normal.sample(rng)))
        .collect()
}

/// Uniform points in a square of side `side_m` meters centered on `center`.
pub fn uniform_square(rng: &mut impl Rng, center: GeoPoint, side_m: f64, n: usize) -> Vec<GeoPoint> {
    let half = side_m / 2.0;
    (0..n)
        .map(|_| offset(center, rng.random_range(-half..half), rng.random_range(-half..half)))
        .collect()
}

pub const SAMPLE_CENTER: GeoPoint = GeoPoint {
    lat: 41.8781,
    lon: -87.6298,
};

/// Neighborhood boxes of the sample city as (name, east offset, north offset), 2 km wide.
const SAMPLE_HOODS: [(&str, f64, f64); 3] = [
    ("Riverside", -3000.0, 0.0),
    ("Old Town", 0.0, 0.0),
    ("Lakeshore", 3000.0, 0.0),
];
const HOOD_SIDE_M: f64 = 2000.0;

/// The sample neighborhoods as a GeoJSON FeatureCollection.
pub fn sample_neighborhoods() -> Value {
    let features: Vec<Value> = SAMPLE_HOODS
        .iter()
        .map(|&(name, east, north)| {
            let h = HOOD_SIDE_M / 2.0;
            let corners = [(-h, -h), (h, -h), (h, h), (-h, h), (-h, -h)]
                .map(|(dx, dy)| offset(SAMPLE_CENTER, east + dx, north + dy))
                .map(|p| json!([p.lon, p.lat]));
            json!({
                "type": "Feature",
                "properties": { "name": name },
                "geometry": { "type": "Polygon", "coordinates": [corners] },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

fn record(id: String, text: String, timestamp: i64, p: GeoPoint) -> RawRecord {
    RawRecord {
        id,
        text,
        timestamp,
        lat: Some(p.lat),
        lon: Some(p.lon),
    }
}

const MONTH_STARTS: [i64; 2] = [1_514_764_800, 1_517_443_200]; // 2018-01, 2018-02
const MONTH_SECONDS: i64 = 28 * 86_400;

/// Geolocated posts for the sample city: a positive hotspot in one
/// neighborhood, a negative one in another, a mixed one in the third,
/// a bot location repeating the same coordinate, and background chatter.
pub fn sample_geo_corpus(seed: u64) -> Vec<RawRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let push = |rng: &mut ChaCha8Rng, text: String, p: GeoPoint, month: usize, out: &mut Vec<RawRecord>| {
        let ts = MONTH_STARTS[month] + rng.random_range(0..MONTH_SECONDS);
        out.push(record(format!("g{:05}", out.len()), text, ts, p));
    };
    let hood = |i: usize| offset(SAMPLE_CENTER, SAMPLE_HOODS[i].1, SAMPLE_HOODS[i].2);
    for month in 0..MONTH_STARTS.len() {
        for p in gaussian_blob(&mut rng, hood(0), 120.0, 30) {
            let text = sentence(&mut rng, Topic::Positive);
            push(&mut rng, text, p, month, &mut out);
        }
        for p in gaussian_blob(&mut rng, hood(1), 120.0, 30) {
            let text = sentence(&mut rng, Topic::Negative);
            push(&mut rng, text, p, month, &mut out);
        }
        for (i, p) in gaussian_blob(&mut rng, offset(hood(2), 300.0, 300.0), 120.0, 30)
            .into_iter()
            .enumerate()
        {
            let t = if i % 3 == 0 { Topic::Negative } else { Topic::Positive };
            let text = sentence(&mut rng, t);
            push(&mut rng, text, p, month, &mut out);
        }
        let bot = offset(hood(1), -500.0, 600.0);
        for _ in 0..12 {
            let text = sentence(&mut rng, Topic::Positive);
            push(&mut rng, text, bot, month, &mut out);
        }
        for p in uniform_square(&mut rng, SAMPLE_CENTER, 9000.0, 60) {
            let text = sentence(&mut rng, Topic::Plain);
            push(&mut rng, text, p, month, &mut out);
        }
        for p in uniform_square(&mut rng, SAMPLE_CENTER, 9000.0, 12) {
            let t = if rng.random_bool(0.5) {
                Topic::Positive
            } else {
                Topic::Negative
            };
            let text = sentence(&mut rng, t);
            push(&mut rng, text, p, month, &mut out);
        }
        // Posts that mention a dictionary word in passing.
        for p in gaussian_blob(&mut rng, hood(0), 300.0, 15) {
            let word = POSITIVE_WORDS.choose(&mut rng).expect("non-empty");
            let text = format!(
                "{} {word} {}",
                sentence(&mut rng, Topic::Plain),
                sentence(&mut rng, Topic::Plain)
            );
            push(&mut rng, text, p, month, &mut out);
        }
    }
    out
}

/// External perception points in the survey's vocabulary, placed around the
/// sample hotspots.
pub fn sample_external_points(seed: u64) -> Vec<(String, GeoPoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hood = |i: usize| offset(SAMPLE_CENTER, SAMPLE_HOODS[i].1, SAMPLE_HOODS[i].2);
    let mut out = Vec::new();
    let groups: [(usize, &[&str]); 3] = [
        (0, &["safety", "beautiful", "wealthy", "lively"]),
        (1, &["boring", "depressing", "lively"]),
        (2, &["safety", "depressing", "beautiful"]),
    ];
    for (h, labels) in groups {
        for p in gaussian_blob(&mut rng, hood(h), 400.0, 12) {
            out.push((labels.choose(&mut rng).expect("non-empty").to_string(), p));
        }
    }
    out
}

/// Random geolocated corpus for robustness checks: texts mix every topic,
/// locations mix hotspots and exact duplicates, timestamps span three months.
pub fn fuzz_geo_corpus(seed: u64, count: usize) -> Vec<RawRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hotspots: Vec<GeoPoint> = uniform_square(&mut rng, SAMPLE_CENTER, 8000.0, 4);
    (0..count)
        .map(|i| {
            let p = match rng.random_range(0..4) {
                0 => hotspots[rng.random_range(0..hotspots.len())],
                1 => uniform_square(&mut rng, SAMPLE_CENTER, 9000.0, 1)[0],
                _ => {
                    let c = hotspots[rng.random_range(0..hotspots.len())];
                    gaussian_blob(&mut rng, c, 150.0, 1)[0]
                }
            };
            let t = topic(&mut rng);
            let ts = MONTH_STARTS[0] + rng.random_range(0..3 * 30 * 86_400);
            record(format!("f{i:05}"), sentence(&mut rng, t), ts, p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::haversine_m;

    #[test]
    fn generators_are_seeded() {
        assert_eq!(planted_reviews(20, 3).records, planted_reviews(20, 3).records);
        assert_ne!(planted_reviews(20, 3).records, planted_reviews(20, 4).records);
        assert_eq!(sample_geo_corpus(1), sample_geo_corpus(1));
    }

    #[test]
    fn offsets_are_metric() {
        let p = offset(SAMPLE_CENTER, 1000.0, 0.0);
        assert!((haversine_m(SAMPLE_CENTER, p) - 1000.0).abs() < 0.5);
        let q = offset(SAMPLE_CENTER, 0.0, -250.0);
        assert!((haversine_m(SAMPLE_CENTER, q) - 250.0).abs() < 1e-6);
    }

    #[test]
    fn lexicon_polarities_split_groups() {
        let lex = sample_lexicons();
        assert!(POSITIVE_WORDS.iter().all(|w| lex.sentiment[*w] > 0.0));
        assert!(NEGATIVE_WORDS.iter().all(|w| lex.sentiment[*w] < 0.0));
        assert!(NOISE_WORDS.iter().all(|w| !lex.sentiment.contains_key(*w)));
    }
}
