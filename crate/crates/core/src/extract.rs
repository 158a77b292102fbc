//! From geolocated posts to monthly perception clusters.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Datelike};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::dictionary::UopDictionary;
use crate::embeddings::EmbeddingModel;
use crate::error::{Error, Result};
use crate::geo::{haversine_m, spherical_mean, GeoPoint};
use crate::hdbscan::hdbscan;
use crate::preprocess::Document;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDocument {
    pub doc: Document,
    pub labels: BTreeSet<String>,
    /// 0..=100; zero until the semantic filter has run.
    pub semantic_score: f64,
}

impl LabeledDocument {
    fn location(&self) -> GeoPoint {
        self.doc.geo.expect("extraction works on geolocated documents")
    }
}

/// Calendar month in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn from_timestamp(seconds: i64) -> Option<Self> {
        let dt = DateTime::from_timestamp(seconds, 0)?;
        Some(YearMonth {
            year: dt.year(),
            month: dt.month(),
        })
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionCluster {
    pub id: usize,
    pub month: YearMonth,
    /// Sorted by document id.
    pub members: Vec<LabeledDocument>,
    pub centroid: GeoPoint,
}

/// Drop every document sharing its exact coordinates with `thresh - 1` or
/// more others. Order is preserved.
pub fn spatial_noise_filter(docs: Vec<Document>, thresh: usize) -> Result<Vec<Document>> {
    let mut occupancy: HashMap<(u64, u64), usize> = HashMap::new();
    for d in &docs {
        let g = d
            .geo
            .ok_or_else(|| Error::Invalid(format!("document {:?} has no location", d.id)))?;
        *occupancy.entry(g.bits()).or_default() += 1;
    }
    Ok(docs
        .into_iter()
        .filter(|d| occupancy[&d.geo.expect("checked above").bits()] < thresh)
        .collect())
}

/// Labels of every community sharing a stem with the document.
pub fn match_dictionary(doc: &Document, dict: &UopDictionary) -> BTreeSet<String> {
    let mut hits = BTreeSet::new();
    for s in doc.stems() {
        if let Some(ids) = dict.communities_for_stem(s) {
            hits.extend(ids.iter().copied());
        }
    }
    hits.into_iter().map(|i| dict.communities[i].label.clone()).collect()
}

/// Label documents, dropping those that match no community.
pub fn label_documents(docs: Vec<Document>, dict: &UopDictionary) -> Vec<LabeledDocument> {
    docs.into_iter()
        .filter_map(|doc| {
            let labels = match_dictionary(&doc, dict);
            (!labels.is_empty()).then_some(LabeledDocument {
                doc,
                labels,
                semantic_score: 0.0,
            })
        })
        .collect()
}

/// Score each document with `score` and keep those strictly above `thresh`.
pub fn semantic_filter_by<F>(docs: Vec<LabeledDocument>, thresh: f64, score: F) -> Result<Vec<LabeledDocument>>
where
    F: Fn(&LabeledDocument) -> Result<f64> + Sync,
{
    let scores = docs.par_iter().map(&score).collect::<Result<Vec<f64>>>()?;
    Ok(docs
        .into_iter()
        .zip(scores)
        .filter(|(_, s)| *s > thresh)
        .map(|(mut d, s)| {
            d.semantic_score = s;
            d
        })
        .collect())
}

/// Best similarity between the document and any of its assigned communities.
pub fn semantic_score(doc: &LabeledDocument, model: &EmbeddingModel, dict: &UopDictionary) -> Result<f64> {
    let mut best = 0.0f64;
    for label in &doc.labels {
        let community = dict
            .community(label)
            .ok_or_else(|| Error::UnknownLabel(label.clone()))?;
        best = best.max(model.doc_community_score(&doc.doc, &community.members)?);
    }
    Ok(best)
}

pub fn semantic_filter(
    docs: Vec<LabeledDocument>,
    model: &EmbeddingModel,
    dict: &UopDictionary,
    thresh: f64,
) -> Result<Vec<LabeledDocument>> {
    semantic_filter_by(docs, thresh, |d| semantic_score(d, model, dict))
}

/// Split documents by the UTC month of their timestamp, keeping input order.
pub fn monthly_partition(docs: Vec<LabeledDocument>) -> Result<BTreeMap<YearMonth, Vec<LabeledDocument>>> {
    let mut parts: BTreeMap<YearMonth, Vec<LabeledDocument>> = BTreeMap::new();
    for d in docs {
        let month = YearMonth::from_timestamp(d.doc.timestamp)
            .ok_or_else(|| Error::Invalid(format!("timestamp out of range for {:?}", d.doc.id)))?;
        parts.entry(month).or_default().push(d);
    }
    Ok(parts)
}

/// Density clustering of one month's documents under haversine distance.
///
/// Documents are ordered by id first, so the result does not depend on
/// input order. Returned clusters carry `id` 0.. in order of their
/// lowest document id; the second value holds the noise.
pub fn cluster_spatial(
    mut docs: Vec<LabeledDocument>,
    month: YearMonth,
    min_cluster_size: usize,
) -> (Vec<PerceptionCluster>, Vec<LabeledDocument>) {
    docs.sort_by(|a, b| a.doc.id.cmp(&b.doc.id));
    let points: Vec<GeoPoint> = docs.iter().map(LabeledDocument::location).collect();
    let clustering = hdbscan(points.len(), min_cluster_size, |i, j| haversine_m(points[i], points[j]));

    let mut members: Vec<Vec<LabeledDocument>> = vec![Vec::new(); clustering.cluster_count()];
    let mut noise = Vec::new();
    for (doc, label) in docs.into_iter().zip(&clustering.labels) {
        match label {
            Some(c) => members[*c].push(doc),
            None => noise.push(doc),
        }
    }
    let clusters = members
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let pts: Vec<GeoPoint> = members.iter().map(LabeledDocument::location).collect();
            PerceptionCluster {
                id,
                month,
                centroid: spherical_mean(&pts).unwrap_or(pts[0]),
                members,
            }
        })
        .collect();
    (clusters, noise)
}

/// Document counts after each stage, plus clusters found per month.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageReport {
    /// Input documents.
    pub documents: usize,
    /// After the spatial noise filter.
    pub spatial_filtered: usize,
    /// After dictionary labeling.
    pub labeled: usize,
    /// After the semantic filter.
    pub semantic_filtered: usize,
    /// Documents that ended up in some cluster.
    pub clustered: usize,
    pub clusters_per_month: BTreeMap<String, usize>,
}

impl StageReport {
    pub fn rows(&self) -> Vec<(String, usize)> {
        let mut rows = vec![
            ("documents".to_string(), self.documents),
            ("spatial_filter".to_string(), self.spatial_filtered),
            ("labeled".to_string(), self.labeled),
            ("semantic_filter".to_string(), self.semantic_filtered),
            ("clustered".to_string(), self.clustered),
        ];
        rows.extend(
            self.clusters_per_month
                .iter()
                .map(|(m, &c)| (format!("clusters_{m}"), c)),
        );
        rows
    }

    pub fn is_monotone(&self) -> bool {
        self.semantic_filtered <= self.labeled
            && self.labeled <= self.spatial_filtered
            && self.spatial_filtered <= self.documents
    }

    /// CSV with columns `stage,count,run`.
    pub fn write_csv(&self, path: &Path, run: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::write(path, e.into()))?;
        w.write_record(["stage", "count", "run"])
            .map_err(|e| Error::write(path, e.into()))?;
        for (stage, count) in self.rows() {
            w.write_record([stage, count.to_string(), run.to_string()])
                .map_err(|e| Error::write(path, e.into()))?;
        }
        w.flush().map_err(|e| Error::write(path, e))
    }
}

/// Run the whole extraction over a geolocated corpus.
pub fn extract_perceptions(
    corpus: Vec<Document>,
    dict: &UopDictionary,
    model: &EmbeddingModel,
    config: &PipelineConfig,
) -> Result<(Vec<PerceptionCluster>, StageReport)> {
    let mut report = StageReport {
        documents: corpus.len(),
        ..Default::default()
    };
    let docs = spatial_noise_filter(corpus, config.thresh_spatial)?;
    report.spatial_filtered = docs.len();
    let labeled = label_documents(docs, dict);
    report.labeled = labeled.len();
    let kept = semantic_filter(labeled, model, dict, config.thresh_semantic)?;
    report.semantic_filtered = kept.len();
    log::info!(
        "extract: {} -> {} -> {} -> {} documents",
        report.documents,
        report.spatial_filtered,
        report.labeled,
        report.semantic_filtered
    );

    let months = monthly_partition(kept)?;
    let per_month: Vec<Vec<PerceptionCluster>> = months
        .into_par_iter()
        .map(|(month, docs)| cluster_spatial(docs, month, config.min_cluster_size).0)
        .collect();

    let mut clusters = Vec::new();
    for month_clusters in per_month {
        for mut c in month_clusters {
            *report.clusters_per_month.entry(c.month.to_string()).or_default() += 1;
            report.clustered += c.members.len();
            c.id = clusters.len();
            clusters.push(c);
        }
    }
    Ok((clusters, report))
}
