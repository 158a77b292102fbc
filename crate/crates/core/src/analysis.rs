//! Neighborhood-level perception strengths and comparison with external
//! perception points.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{CounterpartScope, StdDivisor};
use crate::corpus_io::PerceptionPoint;
use crate::dictionary::{Polarity, UopDictionary};
use crate::error::{Error, Result};
use crate::geo::{haversine_m, point_in_ring, segments_intersect, GeoPoint};
use crate::preprocess::Document;

const Z_95: f64 = 1.96;
/// Samples below this size get the small-sample flag.
pub const SMALL_SAMPLE: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSpec {
    pub name: String,
    /// Closed ring: the last vertex repeats the first.
    ring: Vec<GeoPoint>,
}

impl NeighborhoodSpec {
    /// Validate a ring, closing it if needed.
    pub fn new(name: impl Into<String>, mut ring: Vec<GeoPoint>) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: &str| Error::InvalidNeighborhood {
            name: name.clone(),
            reason: reason.into(),
        };
        if ring.iter().any(|p| !p.is_valid()) {
            return Err(invalid("vertex outside valid coordinates"));
        }
        if ring.first() != ring.last() {
            ring.push(ring[0]);
        }
        let distinct: BTreeSet<(u64, u64)> = ring.iter().map(GeoPoint::bits).collect();
        if distinct.len() < 3 {
            return Err(invalid("needs at least 3 distinct vertices"));
        }
        let edges = ring.len() - 1;
        for i in 0..edges {
            for j in i + 1..edges {
                let adjacent = j == i + 1 || (i == 0 && j == edges - 1);
                if !adjacent && segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                    return Err(invalid("ring intersects itself"));
                }
            }
        }
        Ok(NeighborhoodSpec { name, ring })
    }

    pub fn from_bbox(name: impl Into<String>, west: f64, south: f64, east: f64, north: f64) -> Result<Self> {
        let p = GeoPoint::new;
        Self::new(
            name,
            vec![p(south, west), p(south, east), p(north, east), p(north, west)],
        )
    }

    pub fn ring(&self) -> &[GeoPoint] {
        &self.ring
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        point_in_ring(p, &self.ring)
    }
}

fn ring_from_json(value: &Value) -> Option<Vec<GeoPoint>> {
    value
        .as_array()?
        .iter()
        .map(|pair| match pair.as_array()?.as_slice() {
            [lon, lat] => Some(GeoPoint::new(lat.as_f64()?, lon.as_f64()?)),
            _ => None,
        })
        .collect()
}

fn neighborhood_from_json(value: &Value, path: &Path, i: usize) -> Result<NeighborhoodSpec> {
    let bad = |msg: &str| Error::malformed(path, 0, format!("neighborhood {i}: {msg}"));
    // GeoJSON features keep their name in properties.
    let name = value["properties"]["name"]
        .as_str()
        .or_else(|| value["name"].as_str())
        .ok_or_else(|| bad("missing name"))?;
    if let Some(geometry) = value.get("geometry") {
        if geometry["type"] != "Polygon" {
            return Err(bad("only Polygon geometries are supported"));
        }
        let ring = ring_from_json(&geometry["coordinates"][0]).ok_or_else(|| bad("bad polygon coordinates"))?;
        return NeighborhoodSpec::new(name, ring);
    }
    if let Some(polygon) = value.get("polygon") {
        let ring = ring_from_json(polygon).ok_or_else(|| bad("bad polygon coordinates"))?;
        return NeighborhoodSpec::new(name, ring);
    }
    if let Some(bbox) = value.get("bbox") {
        let b: Vec<f64> = bbox
            .as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect())
            .filter(|b: &Vec<f64>| b.len() == 4)
            .ok_or_else(|| bad("bbox must be [west, south, east, north]"))?;
        return NeighborhoodSpec::from_bbox(name, b[0], b[1], b[2], b[3]);
    }
    Err(bad("needs a geometry, polygon or bbox"))
}

/// Read neighborhoods from a GeoJSON FeatureCollection of polygons, or from a
/// JSON array of `{name, polygon}` / `{name, bbox}` objects. Coordinates are
/// `[lon, lat]`.
pub fn load_neighborhoods(path: &Path) -> Result<Vec<NeighborhoodSpec>> {
    let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.line(), e.to_string()))?;
    let items = value
        .get("features")
        .unwrap_or(&value)
        .as_array()
        .ok_or_else(|| Error::malformed(path, 0, "expected a FeatureCollection or an array"))?;
    let specs = items
        .iter()
        .enumerate()
        .map(|(i, v)| neighborhood_from_json(v, path, i))
        .collect::<Result<Vec<_>>>()?;
    let mut names = BTreeSet::new();
    for s in &specs {
        if !names.insert(&s.name) {
            return Err(Error::malformed(
                path,
                0,
                format!("duplicate neighborhood {:?}", s.name),
            ));
        }
    }
    Ok(specs)
}

/// First neighborhood (in input order) containing `p`.
pub fn locate(neighborhoods: &[NeighborhoodSpec], p: GeoPoint) -> Option<usize> {
    neighborhoods.iter().position(|n| n.contains(p))
}

/// Point counts indexed by category, month and neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTensor {
    pub categories: Vec<String>,
    pub months: Vec<String>,
    pub neighborhoods: Vec<String>,
    counts: Vec<u64>,
}

impl CountTensor {
    pub fn zeros(categories: Vec<String>, months: Vec<String>, neighborhoods: Vec<String>) -> Self {
        let len = categories.len() * months.len() * neighborhoods.len();
        CountTensor {
            categories,
            months,
            neighborhoods,
            counts: vec![0; len],
        }
    }

    fn offset(&self, i: usize, j: usize, n: usize) -> usize {
        (i * self.months.len() + j) * self.neighborhoods.len() + n
    }

    pub fn get(&self, i: usize, j: usize, n: usize) -> u64 {
        self.counts[self.offset(i, j, n)]
    }

    pub fn set(&mut self, i: usize, j: usize, n: usize, value: u64) {
        let o = self.offset(i, j, n);
        self.counts[o] = value;
    }

    /// Counts of one (category, month) across all neighborhoods.
    pub fn row(&self, i: usize, j: usize) -> &[u64] {
        let o = self.offset(i, j, 0);
        &self.counts[o..o + self.neighborhoods.len()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Count (document, label) incidences per category, month and neighborhood.
///
/// A point lying in several neighborhoods is counted in the first one only;
/// points outside every neighborhood and labels outside `categories` are
/// ignored.
pub fn count_points(
    points: &[PerceptionPoint],
    neighborhoods: &[NeighborhoodSpec],
    categories: &[String],
) -> CountTensor {
    let months: BTreeSet<&String> = points.iter().map(|p| &p.month).collect();
    let months: Vec<String> = months.into_iter().cloned().collect();
    let mut tensor = CountTensor::zeros(
        categories.to_vec(),
        months.clone(),
        neighborhoods.iter().map(|n| n.name.clone()).collect(),
    );
    let cat_index: BTreeMap<&str, usize> = categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    for p in points {
        let Some(n) = locate(neighborhoods, p.location) else {
            continue;
        };
        let j = months.binary_search(&p.month).expect("month collected above");
        let labels: BTreeSet<&String> = p.labels.iter().collect();
        for label in labels {
            if let Some(&i) = cat_index.get(label.as_str()) {
                let o = tensor.offset(i, j, n);
                tensor.counts[o] += 1;
            }
        }
    }
    tensor
}

/// Mean, standard deviation and z-scores of one row of counts. A zero
/// deviation gives all-zero z-scores.
pub fn standardize(values: &[f64], divisor: StdDivisor) -> (f64, f64, Vec<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    let denom = match divisor {
        StdDivisor::Population => n,
        StdDivisor::Sample => n - 1.0,
    };
    let std = (ss / denom).sqrt();
    let z = values
        .iter()
        .map(|x| if std > 0.0 { (x - mean) / std } else { 0.0 })
        .collect();
    (mean, std, z)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZEntry {
    pub category: String,
    pub month: String,
    pub neighborhood: String,
    pub count: u64,
    pub mean: f64,
    pub std: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZScoreReport {
    pub divisor: StdDivisor,
    pub entries: Vec<ZEntry>,
}

/// Standardize every (category, month) row across neighborhoods.
pub fn z_scores(counts: &CountTensor, divisor: StdDivisor) -> Result<ZScoreReport> {
    if counts.neighborhoods.len() < 2 {
        return Err(Error::TooFewNeighborhoods(counts.neighborhoods.len()));
    }
    let mut entries = Vec::new();
    for (i, category) in counts.categories.iter().enumerate() {
        for (j, month) in counts.months.iter().enumerate() {
            let row: Vec<f64> = counts.row(i, j).iter().map(|&c| c as f64).collect();
            let (mean, std, z) = standardize(&row, divisor);
            for (n, neighborhood) in counts.neighborhoods.iter().enumerate() {
                entries.push(ZEntry {
                    category: category.clone(),
                    month: month.clone(),
                    neighborhood: neighborhood.clone(),
                    count: counts.get(i, j, n),
                    mean,
                    std,
                    z: z[n],
                });
            }
        }
    }
    Ok(ZScoreReport { divisor, entries })
}

pub fn write_zscores_csv(report: &ZScoreReport, path: &Path) -> Result<()> {
    let wrap = |e: csv::Error| Error::write(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(["category", "month", "neighborhood", "count", "mean", "std", "z"])
        .map_err(wrap)?;
    for e in &report.entries {
        w.write_record([
            e.category.clone(),
            e.month.clone(),
            e.neighborhood.clone(),
            e.count.to_string(),
            e.mean.to_string(),
            e.std.to_string(),
            e.z.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::write(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarityClass {
    Positive,
    Neutral,
    Negative,
}

impl PolarityClass {
    pub const ALL: [PolarityClass; 3] = [PolarityClass::Positive, PolarityClass::Neutral, PolarityClass::Negative];
}

impl fmt::Display for PolarityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolarityClass::Positive => "positive",
            PolarityClass::Neutral => "neutral",
            PolarityClass::Negative => "negative",
        })
    }
}

impl From<Polarity> for PolarityClass {
    fn from(p: Polarity) -> Self {
        match p {
            Polarity::Positive => PolarityClass::Positive,
            Polarity::Negative => PolarityClass::Negative,
        }
    }
}

/// Polarity class of a category from the dictionary or the external
/// perception survey. Matching ignores case.
pub fn aggregate_polarity(label: &str) -> Result<PolarityClass> {
    match label.to_lowercase().as_str() {
        "great" | "respectful" | "spectacular" | "wealthy" | "beautiful" | "safety" => Ok(PolarityClass::Positive),
        "lively" => Ok(PolarityClass::Neutral),
        "aggressive" | "wrong" | "dead" | "creepy" | "boring" | "depressing" => Ok(PolarityClass::Negative),
        _ => Err(Error::UnknownLabel(label.to_string())),
    }
}

/// Like [`aggregate_polarity`], falling back to the dictionary's own polarity
/// for labels outside the fixed tables.
pub fn label_polarity(label: &str, dict: Option<&UopDictionary>) -> Result<PolarityClass> {
    aggregate_polarity(label).or_else(|e| {
        dict.and_then(|d| d.community(label))
            .map(|c| c.polarity.into())
            .ok_or(e)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalPoint {
    pub label: String,
    pub location: GeoPoint,
}

/// Read `label,lat,lon` rows. A header row is skipped when present.
pub fn load_external_points(path: &Path) -> Result<Vec<ExternalPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::read(path, e.into()))?;
    let mut points = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::malformed(path, i + 1, e.to_string()))?;
        if row.len() != 3 {
            return Err(Error::malformed(path, i + 1, "expected label,lat,lon"));
        }
        let (lat, lon) = (row[1].parse::<f64>(), row[2].parse::<f64>());
        let (Ok(lat), Ok(lon)) = (lat, lon) else {
            if i == 0 {
                continue;
            }
            return Err(Error::malformed(path, i + 1, "non-numeric coordinate"));
        };
        let location = GeoPoint::new(lat, lon);
        if !location.is_valid() {
            return Err(Error::malformed(path, i + 1, "coordinate out of range"));
        }
        points.push(ExternalPoint {
            label: row[0].to_string(),
            location,
        });
    }
    if points.is_empty() {
        return Err(Error::malformed(path, 0, "no external points"));
    }
    Ok(points)
}

/// Nearest-counterpart distances of one (neighborhood, polarity) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub neighborhood: String,
    pub polarity: PolarityClass,
    /// External points in the group.
    pub n_points: usize,
    /// `None` when we have no point of this polarity to compare against.
    pub mean_m: Option<f64>,
    pub ci_low_m: Option<f64>,
    pub ci_high_m: Option<f64>,
    pub small_sample: bool,
}

/// Mean with a normal-approximation 95% interval. One value gives a
/// zero-width interval.
pub fn mean_ci95(values: &[f64]) -> (f64, f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    if sorted.len() < 2 {
        return (mean, mean, mean);
    }
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z_95 * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

/// For each external point, the distance to our nearest point of the same
/// polarity, summarized per neighborhood and polarity.
///
/// Only groups holding at least one external point are reported. External
/// points outside every neighborhood are ignored; with
/// [`CounterpartScope::SameNeighborhood`] so are our points.
pub fn nearest_distance_comparison(
    external: &[ExternalPoint],
    ours: &[PerceptionPoint],
    neighborhoods: &[NeighborhoodSpec],
    scope: CounterpartScope,
    dict: Option<&UopDictionary>,
) -> Result<Vec<ComparisonRow>> {
    // Our points keyed by (neighborhood or None, polarity).
    let mut pool: BTreeMap<(Option<usize>, PolarityClass), Vec<GeoPoint>> = BTreeMap::new();
    for p in ours {
        let n = match scope {
            CounterpartScope::SameNeighborhood => match locate(neighborhoods, p.location) {
                Some(n) => Some(n),
                None => continue,
            },
            CounterpartScope::CityWide => None,
        };
        let classes = p
            .labels
            .iter()
            .map(|l| label_polarity(l, dict))
            .collect::<Result<BTreeSet<_>>>()?;
        for c in classes {
            pool.entry((n, c)).or_default().push(p.location);
        }
    }

    let mut groups: BTreeMap<(usize, PolarityClass), Vec<GeoPoint>> = BTreeMap::new();
    for e in external {
        let class = aggregate_polarity(&e.label)?;
        if let Some(n) = locate(neighborhoods, e.location) {
            groups.entry((n, class)).or_default().push(e.location);
        }
    }

    let mut rows = Vec::with_capacity(groups.len());
    for ((n, class), points) in groups {
        let key = match scope {
            CounterpartScope::SameNeighborhood => (Some(n), class),
            CounterpartScope::CityWide => (None, class),
        };
        let mut row = ComparisonRow {
            neighborhood: neighborhoods[n].name.clone(),
            polarity: class,
            n_points: points.len(),
            mean_m: None,
            ci_low_m: None,
            ci_high_m: None,
            small_sample: points.len() < SMALL_SAMPLE,
        };
        if let Some(candidates) = pool.get(&key) {
            let distances: Vec<f64> = points
                .iter()
                .map(|&p| {
                    candidates
                        .iter()
                        .map(|&q| haversine_m(p, q))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            let (mean, lo, hi) = mean_ci95(&distances);
            row.mean_m = Some(mean);
            row.ci_low_m = Some(lo);
            row.ci_high_m = Some(hi);
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    let wrap = |e: csv::Error| Error::write(path, e.into());
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record([
        "neighborhood",
        "polarity",
        "mean_m",
        "ci_low_m",
        "ci_high_m",
        "n_points",
    ])
    .map_err(wrap)?;
    for r in rows {
        w.write_record([
            r.neighborhood.clone(),
            r.polarity.to_string(),
            opt(r.mean_m),
            opt(r.ci_low_m),
            opt(r.ci_high_m),
            r.n_points.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::write(path, e))
}

/// Stem counts, most frequent first, ties in lexicographic order.
pub fn term_frequencies(docs: &[Document]) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        for s in d.stems() {
            *counts.entry(s).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().map(|(s, c)| (s.to_string(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

pub fn write_term_frequencies_csv(freqs: &[(String, usize)], path: &Path) -> Result<()> {
    let wrap = |e: csv::Error| Error::write(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(["stem", "count"]).map_err(wrap)?;
    for (stem, count) in freqs {
        w.write_record([stem.as_str(), &count.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::write(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Sentence;
    use proptest::prelude::*;

    fn square(name: &str, lat: f64, lon: f64) -> NeighborhoodSpec {
        NeighborhoodSpec::from_bbox(name, lon, lat, lon + 0.1, lat + 0.1).unwrap()
    }

    fn point(id: &str, labels: &[&str], month: &str, lat: f64, lon: f64) -> PerceptionPoint {
        PerceptionPoint {
            doc_id: id.into(),
            cluster_id: 0,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            month: month.into(),
            location: GeoPoint::new(lat, lon),
        }
    }

    #[test]
    fn invalid_rings() {
        let p = GeoPoint::new;
        let two = NeighborhoodSpec::new("x", vec![p(0.0, 0.0), p(1.0, 1.0), p(0.0, 0.0)]);
        assert!(matches!(two, Err(Error::InvalidNeighborhood { .. })));
        let bowtie = NeighborhoodSpec::new("x", vec![p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)]);
        assert!(bowtie.is_err());
        let ok = NeighborhoodSpec::new("x", vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)]).unwrap();
        assert_eq!(ok.ring().len(), 4);
    }

    #[test]
    fn neighborhoods_from_geojson_and_bbox() {
        let dir = tempfile::tempdir().unwrap();
        let gj = dir.path().join("n.geojson");
        fs::write(
            &gj,
            r#"{"type":"FeatureCollection","features":[
              {"type":"Feature","properties":{"name":"Loop"},
               "geometry":{"type":"Polygon","coordinates":[[[-87.64,41.87],[-87.62,41.87],[-87.62,41.89],[-87.64,41.89],[-87.64,41.87]]]}}]}"#,
        )
        .unwrap();
        let n = load_neighborhoods(&gj).unwrap();
        assert_eq!(n[0].name, "Loop");
        assert!(n[0].contains(GeoPoint::new(41.88, -87.63)));
        assert!(!n[0].contains(GeoPoint::new(41.88, -87.60)));

        let arr = dir.path().join("n.json");
        fs::write(&arr, r#"[{"name":"A","bbox":[0,0,1,1]},{"name":"A","bbox":[2,2,3,3]}]"#).unwrap();
        assert!(load_neighborhoods(&arr).is_err());
    }

    #[test]
    fn multi_label_points_count_per_label() {
        let hoods = [square("n0", 0.0, 0.0), square("n1", 1.0, 1.0)];
        let cats: Vec<String> = ["GREAT", "LIVELY"].map(String::from).to_vec();
        let pts = [
            point("a", &["GREAT", "LIVELY"], "2018-01", 0.05, 0.05),
            point("b", &["GREAT"], "2018-01", 1.05, 1.05),
            point("c", &["GREAT"], "2018-01", 5.0, 5.0),
        ];
        let t = count_points(&pts, &hoods, &cats);
        assert_eq!(t.get(0, 0, 0), 1);
        assert_eq!(t.get(1, 0, 0), 1);
        assert_eq!(t.get(0, 0, 1), 1);
        assert_eq!(t.total(), 3);
        assert_eq!(count_points(&[], &hoods, &cats).total(), 0);
    }

    #[test]
    fn z_scores_of_ten_twenty_thirty() {
        let (mean, std, z) = standardize(&[10.0, 20.0, 30.0], StdDivisor::Population);
        assert_eq!(mean, 20.0);
        assert!((std - 8.1650).abs() < 1e-4);
        for (got, want) in z.iter().zip([-1.2247, 0.0, 1.2247]) {
            assert!((got - want).abs() < 1e-4);
        }
        let (_, std, z) = standardize(&[4.0, 4.0], StdDivisor::Population);
        assert_eq!(std, 0.0);
        assert_eq!(z, [0.0, 0.0]);
    }

    #[test]
    fn one_neighborhood_is_an_error() {
        let t = CountTensor::zeros(vec!["GREAT".into()], vec!["2018-01".into()], vec!["only".into()]);
        assert!(matches!(
            z_scores(&t, StdDivisor::Population),
            Err(Error::TooFewNeighborhoods(1))
        ));
    }

    #[test]
    fn polarity_table() {
        assert_eq!(aggregate_polarity("wealthy").unwrap(), PolarityClass::Positive);
        assert_eq!(aggregate_polarity("lively").unwrap(), PolarityClass::Neutral);
        assert_eq!(aggregate_polarity("LIVELY").unwrap(), PolarityClass::Neutral);
        assert_eq!(aggregate_polarity("CREEPY").unwrap(), PolarityClass::Negative);
        assert!(aggregate_polarity("FUNKY").is_err());
    }

    #[test]
    fn nearest_distances() {
        let hoods = [square("n0", 41.85, -87.65), square("n1", 40.0, -80.0)];
        let ours = [
            point("a", &["GREAT"], "2018-01", 41.8781, -87.6298),
            point("b", &["CREEPY"], "2018-01", 41.8881, -87.6298),
        ];
        let ext = |label: &str, lat, lon| ExternalPoint {
            label: label.into(),
            location: GeoPoint::new(lat, lon),
        };
        let external = [
            ext("safety", 41.8781, -87.6298),
            ext("boring", 41.8781, -87.6298),
            ext("lively", 41.8781, -87.6298),
        ];
        let rows =
            nearest_distance_comparison(&external, &ours, &hoods, CounterpartScope::SameNeighborhood, None).unwrap();
        assert_eq!(rows.len(), 3);
        let pos = rows.iter().find(|r| r.polarity == PolarityClass::Positive).unwrap();
        assert_eq!(pos.mean_m, Some(0.0));
        assert_eq!((pos.ci_low_m, pos.ci_high_m), (Some(0.0), Some(0.0)));
        assert!(pos.small_sample);
        let neg = rows.iter().find(|r| r.polarity == PolarityClass::Negative).unwrap();
        assert!((neg.mean_m.unwrap() - 1111.95).abs() < 0.5);
        let neutral = rows.iter().find(|r| r.polarity == PolarityClass::Neutral).unwrap();
        assert_eq!(neutral.mean_m, None);
    }

    #[test]
    fn ci_width() {
        let (m, lo, hi) = mean_ci95(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let half = 1.96 * (5.0f64 / 3.0 / 4.0).sqrt();
        assert!((hi - m - half).abs() < 1e-12 && (m - lo - half).abs() < 1e-12);
    }

    #[test]
    fn external_points_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pp.csv");
        fs::write(&p, "label,lat,lon\nsafety, 41.9, -87.6\nboring,41.8,-87.7\n").unwrap();
        let pts = load_external_points(&p).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].label, "safety");
        fs::write(&p, "label,lat,lon\n").unwrap();
        assert!(load_external_points(&p).is_err());
    }

    #[test]
    fn term_counts() {
        let doc = |words: &[&str]| Document {
            id: "d".into(),
            sentences: vec![Sentence::from_surfaces(words.iter().map(|w| w.to_string()).collect())],
            timestamp: 0,
            geo: None,
        };
        assert_eq!(
            term_frequencies(&[doc(&["great", "great", "park"])]),
            [("great".to_string(), 2), ("park".to_string(), 1)]
        );
        assert!(term_frequencies(&[]).is_empty());
        let tie = term_frequencies(&[doc(&["zoo", "art"])]);
        assert_eq!(tie[0].0, "art");
    }

    proptest! {
        #[test]
        fn z_scores_center(row in prop::collection::vec(0u32..500, 2..12)) {
            let values: Vec<f64> = row.iter().map(|&c| c as f64).collect();
            let (mean, std, z) = standardize(&values, StdDivisor::Population);
            prop_assert!(std >= 0.0);
            prop_assert!((values.iter().sum::<f64>() - mean * values.len() as f64).abs() < 1e-9);
            if std > 0.0 {
                prop_assert!(z.iter().sum::<f64>().abs() < 1e-9);
            } else {
                prop_assert!(z.iter().all(|&x| x == 0.0));
            }
        }

        #[test]
        fn comparison_means_ignore_order(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng, seq::SliceRandom};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let hoods = [square("n0", 41.8, -87.7)];
            let labels = ["GREAT", "CREEPY", "LIVELY"];
            let mut ours: Vec<PerceptionPoint> = (0..20)
                .map(|i| point(&i.to_string(), &[labels[i % 3]], "2018-01",
                    41.8 + rng.random::<f64>() * 0.1, -87.7 + rng.random::<f64>() * 0.1))
                .collect();
            let ext_labels = ["safety", "boring", "lively"];
            let mut external: Vec<ExternalPoint> = (0..15)
                .map(|i| ExternalPoint { label: ext_labels[i % 3].into(),
                    location: GeoPoint::new(41.8 + rng.random::<f64>() * 0.1, -87.7 + rng.random::<f64>() * 0.1) })
                .collect();
            let a = nearest_distance_comparison(&external, &ours, &hoods, CounterpartScope::SameNeighborhood, None).unwrap();
            ours.shuffle(&mut rng);
            external.shuffle(&mut rng);
            let b = nearest_distance_comparison(&external, &ours, &hoods, CounterpartScope::SameNeighborhood, None).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.iter().all(|r| r.mean_m.is_none_or(|m| m >= 0.0)));
        }
    }
}
