//! Reading corpora and lexicon resources, writing GeoJSON.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::extract::PerceptionCluster;
use crate::geo::GeoPoint;

/// One input document as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub text: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

impl RawRecord {
    pub fn geo(&self) -> Option<GeoPoint> {
        match (self.lat, self.lon) {
            (Some(lat), Some(lon)) => Some(GeoPoint { lat, lon }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    pub line: usize,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub records: Vec<RawRecord>,
    pub rejected: Vec<Rejected>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdField {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TimeField {
    Seconds(i64),
    Text(String),
}

#[derive(Deserialize)]
struct LineRecord {
    id: IdField,
    text: String,
    timestamp: TimeField,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
}

pub(crate) fn parse_timestamp(text: &str) -> Option<i64> {
    let text = text.trim();
    if let Ok(secs) = text.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.timestamp());
    }
    let naive_formats = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%MZ",
        "%Y-%m-%dT%H:%M",
    ];
    naive_formats
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())
        .map(|dt| dt.and_utc().timestamp())
}

fn check_record(rec: &RawRecord, require_geo: bool) -> std::result::Result<(), String> {
    if rec.id.is_empty() {
        return Err("empty id".into());
    }
    if rec.timestamp < 0 {
        return Err(format!("negative timestamp {}", rec.timestamp));
    }
    match (rec.lat, rec.lon) {
        (Some(lat), Some(lon)) => {
            if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
                return Err(format!("latitude {lat} out of range"));
            }
            if !(lon.is_finite() && (-180.0..=180.0).contains(&lon)) {
                return Err(format!("longitude {lon} out of range"));
            }
        }
        (None, None) if require_geo => return Err("missing coordinates".into()),
        (None, None) => {}
        _ => return Err("only one of lat/lon present".into()),
    }
    Ok(())
}

/// Load a line-delimited JSON corpus.
///
/// Lines that parse but violate record invariants are returned in
/// `rejected`. Unparseable lines and duplicate ids abort the load.
pub fn load_corpus(path: &Path, require_geo: bool) -> Result<LoadedCorpus> {
    let file = File::open(path).map_err(|e| Error::read(path, e))?;
    let mut out = LoadedCorpus::default();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::read(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LineRecord =
            serde_json::from_str(&line).map_err(|e| Error::malformed(path, line_no, e.to_string()))?;
        let id = match parsed.id {
            IdField::Text(s) => s,
            IdField::Number(n) => n.to_string(),
        };
        let timestamp = match parsed.timestamp {
            TimeField::Seconds(s) => Some(s),
            TimeField::Text(s) => parse_timestamp(&s),
        };
        let Some(timestamp) = timestamp else {
            out.rejected.push(Rejected {
                line: line_no,
                id: Some(id),
                reason: "unparseable timestamp".into(),
            });
            continue;
        };
        let rec = RawRecord {
            id,
            text: parsed.text.to_lowercase(),
            timestamp,
            lat: parsed.lat,
            lon: parsed.lon,
        };
        if let Err(reason) = check_record(&rec, require_geo) {
            out.rejected.push(Rejected {
                line: line_no,
                id: Some(rec.id),
                reason,
            });
            continue;
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateId {
                id: rec.id,
                line: line_no,
            });
        }
        out.records.push(rec);
    }
    Ok(out)
}

pub fn write_corpus(records: &[RawRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::write(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        let line = serde_json::to_string(rec).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| Error::write(path, e))?;
    }
    w.flush().map_err(|e| Error::write(path, e))
}

/// Word lists backing preprocessing and sentiment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconBundle {
    pub stopwords: BTreeSet<String>,
    pub contractions: BTreeMap<String, String>,
    pub sentiment: BTreeMap<String, f64>,
    pub adjectives: BTreeSet<String>,
}

pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const CONTRACTIONS_FILE: &str = "contractions.tsv";
pub const SENTIMENT_FILE: &str = "sentiment.tsv";
pub const ADJECTIVES_FILE: &str = "adjectives.txt";

fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.to_string()))
        .collect())
}

fn word_set(path: &Path) -> Result<BTreeSet<String>> {
    Ok(content_lines(path)?
        .into_iter()
        .map(|(_, l)| l.trim().to_lowercase())
        .collect())
}

fn tab_pair(path: &Path, line: usize, text: &str) -> Result<(String, String)> {
    let (key, value) = text
        .split_once('\t')
        .ok_or_else(|| Error::malformed(path, line, "expected two tab-separated fields"))?;
    let key = key.trim().to_lowercase();
    if key.is_empty() {
        return Err(Error::malformed(path, line, "empty key"));
    }
    Ok((key, value.trim().to_lowercase()))
}

pub fn load_lexicons(dir: &Path) -> Result<LexiconBundle> {
    let stopwords = word_set(&dir.join(STOPWORDS_FILE))?;
    let adjectives = word_set(&dir.join(ADJECTIVES_FILE))?;

    let path = dir.join(CONTRACTIONS_FILE);
    let mut contractions = BTreeMap::new();
    for (line, text) in content_lines(&path)? {
        let (k, v) = tab_pair(&path, line, &text)?;
        contractions.insert(k, v);
    }

    let path = dir.join(SENTIMENT_FILE);
    let mut sentiment = BTreeMap::new();
    for (line, text) in content_lines(&path)? {
        let (word, raw) = tab_pair(&path, line, &text)?;
        let score: f64 = raw
            .parse()
            .map_err(|_| Error::malformed(&path, line, format!("score {raw:?} is not a number")))?;
        if !score.is_finite() || !(-1.0..=1.0).contains(&score) {
            return Err(Error::malformed(&path, line, format!("score {score} outside [-1, 1]")));
        }
        sentiment.insert(word, score);
    }

    Ok(LexiconBundle {
        stopwords,
        contractions,
        sentiment,
        adjectives,
    })
}

/// Write the four lexicon files into `dir`, which must exist.
pub fn write_lexicons(lex: &LexiconBundle, dir: &Path) -> Result<()> {
    let put = |name: &str, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::write(&path, e))
    };
    let lines = |words: &BTreeSet<String>| words.iter().map(|w| format!("{w}\n")).collect::<String>();
    put(STOPWORDS_FILE, lines(&lex.stopwords))?;
    put(ADJECTIVES_FILE, lines(&lex.adjectives))?;
    put(
        CONTRACTIONS_FILE,
        lex.contractions.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect(),
    )?;
    put(
        SENTIMENT_FILE,
        lex.sentiment.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect(),
    )
}

/// One clustered document as written to (and read back from) GeoJSON.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionPoint {
    pub doc_id: String,
    pub cluster_id: usize,
    pub labels: Vec<String>,
    /// `YYYY-MM`.
    pub month: String,
    pub location: GeoPoint,
}

pub fn cluster_points(clusters: &[PerceptionCluster]) -> Vec<PerceptionPoint> {
    clusters
        .iter()
        .flat_map(|c| {
            c.members.iter().map(move |m| PerceptionPoint {
                doc_id: m.doc.id.clone(),
                cluster_id: c.id,
                labels: m.labels.iter().cloned().collect(),
                month: c.month.to_string(),
                location: m.doc.geo.expect("clustered documents are geolocated"),
            })
        })
        .collect()
}

pub fn geojson_value(points: &[PerceptionPoint]) -> Value {
    let features: Vec<Value> = points
        .iter()
        .map(|p| {
            let mut labels = p.labels.clone();
            labels.sort();
            json!({
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [p.location.lon, p.location.lat],
                },
                "properties": {
                    "cluster_id": p.cluster_id,
                    "labels": labels,
                    "month": p.month,
                    "doc_id": p.doc_id,
                },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

/// Write clusters as a FeatureCollection with one point per member document.
pub fn write_geojson(clusters: &[PerceptionCluster], path: &Path) -> Result<()> {
    let value = geojson_value(&cluster_points(clusters));
    let mut text = serde_json::to_string_pretty(&value).expect("json serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::write(path, e))
}

pub fn read_geojson_points(path: &Path) -> Result<Vec<PerceptionPoint>> {
    let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    let bad = |msg: String| Error::malformed(path, 0, msg);
    let value: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let features = value["features"]
        .as_array()
        .ok_or_else(|| bad("missing features array".into()))?;
    features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let coords = f["geometry"]["coordinates"]
                .as_array()
                .filter(|c| c.len() == 2)
                .ok_or_else(|| bad(format!("feature {i}: bad coordinates")))?;
            let (lon, lat) = (coords[0].as_f64(), coords[1].as_f64());
            let props = &f["properties"];
            let labels = props["labels"]
                .as_array()
                .ok_or_else(|| bad(format!("feature {i}: missing labels")))?
                .iter()
                .map(|l| l.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>();
            match (
                lat,
                lon,
                props["cluster_id"].as_u64(),
                props["month"].as_str(),
                props["doc_id"].as_str(),
                labels,
            ) {
                (Some(lat), Some(lon), Some(cid), Some(month), Some(doc_id), Some(labels)) => Ok(PerceptionPoint {
                    doc_id: doc_id.to_string(),
                    cluster_id: cid as usize,
                    labels,
                    month: month.to_string(),
                    location: GeoPoint { lat, lon },
                }),
                _ => Err(bad(format!("feature {i}: missing or mistyped properties"))),
            }
        })
        .collect()
}

/// Resolve `path` against `base` unless it is already absolute.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
