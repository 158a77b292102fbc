//! The perception dictionary: pair scoring, word graph, communities.

mod graph;
mod percolation;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingModel;
use crate::error::{Error, Result};
use crate::preprocess::stem;
use crate::sentiment::SentimentLexicon;

pub use graph::{prune, vertex_threshold, WordGraph};
pub use percolation::{k_clique_communities, maximal_cliques};

/// Category names of the eight communities of the reference dictionary.
pub const CANONICAL_LABELS: [&str; 8] = [
    "GREAT",
    "LIVELY",
    "RESPECTFUL",
    "SPECTACULAR",
    "AGGRESSIVE",
    "WRONG",
    "DEAD",
    "CREEPY",
];

/// `alpha * w2v + (1 - alpha) * sent`.
#[inline]
pub fn combine_scores(w2v_sim: f64, sent_sim: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        return w2v_sim;
    }
    alpha * w2v_sim + (1.0 - alpha) * sent_sim
}

/// Pair score mixing embedding similarity with the sentiment product.
pub fn score_sim(model: &EmbeddingModel, lex: &SentimentLexicon, w1: &str, w2: &str, alpha: f64) -> Result<f64> {
    Ok(combine_scores(model.w2v_sim(w1, w2)?, lex.sent_sim(w1, w2), alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphBuild {
    pub graph: WordGraph,
    /// Words dropped because the model does not know them.
    pub out_of_vocabulary: Vec<String>,
}

/// Complete graph over the in-vocabulary `words`, weighted by [`score_sim`].
pub fn build_graph(
    words: &BTreeSet<String>,
    model: &EmbeddingModel,
    lex: &SentimentLexicon,
    alpha: f64,
    k: usize,
) -> Result<GraphBuild> {
    let (known, out_of_vocabulary): (Vec<String>, Vec<String>) = words.iter().cloned().partition(|w| model.contains(w));
    if known.len() < k {
        return Err(Error::TooFewVertices {
            needed: k,
            found: known.len(),
        });
    }
    let mut graph = WordGraph::new(known);
    let n = graph.vertex_count();
    for u in 0..n {
        for v in u + 1..n {
            let w = score_sim(model, lex, &graph.vertices()[u], &graph.vertices()[v], alpha)?;
            graph.add_edge(u, v, w)?;
        }
    }
    Ok(GraphBuild {
        graph,
        out_of_vocabulary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub label: String,
    pub polarity: Polarity,
    pub members: BTreeSet<String>,
    /// Members that also belong to another community.
    pub overlap_words: BTreeSet<String>,
    pub stems: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DictionaryFile", into = "DictionaryFile")]
pub struct UopDictionary {
    pub communities: Vec<Community>,
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    stem_index: BTreeMap<String, BTreeSet<usize>>,
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    alpha: f64,
    beta: f64,
    k: usize,
    communities: Vec<Community>,
}

impl TryFrom<DictionaryFile> for UopDictionary {
    type Error = Error;
    fn try_from(f: DictionaryFile) -> Result<Self> {
        UopDictionary::new(f.communities, f.alpha, f.beta, f.k)
    }
}

impl From<UopDictionary> for DictionaryFile {
    fn from(d: UopDictionary) -> Self {
        DictionaryFile {
            alpha: d.alpha,
            beta: d.beta,
            k: d.k,
            communities: d.communities,
        }
    }
}

impl UopDictionary {
    pub fn new(communities: Vec<Community>, alpha: f64, beta: f64, k: usize) -> Result<Self> {
        let mut labels = BTreeSet::new();
        let mut stem_index: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (i, c) in communities.iter().enumerate() {
            if !labels.insert(c.label.as_str()) {
                return Err(Error::DuplicateLabel(c.label.clone()));
            }
            if !c.overlap_words.is_subset(&c.members) {
                return Err(Error::Invalid(format!("{}: overlap words outside members", c.label)));
            }
            let stems: BTreeSet<String> = c.members.iter().map(|w| stem(w)).collect();
            if stems != c.stems {
                return Err(Error::Invalid(format!("{}: stems do not match members", c.label)));
            }
            for s in stems {
                stem_index.entry(s).or_default().insert(i);
            }
        }
        Ok(UopDictionary {
            communities,
            alpha,
            beta,
            k,
            stem_index,
        })
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.communities.iter().map(|c| c.label.as_str())
    }

    pub fn community(&self, label: &str) -> Option<&Community> {
        self.communities.iter().find(|c| c.label == label)
    }

    /// Communities (by index) that contain a word with this stem.
    pub fn communities_for_stem(&self, stem: &str) -> Option<&BTreeSet<usize>> {
        self.stem_index.get(stem)
    }

    pub fn stem_index(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.stem_index
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("dictionary serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::write(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.line(), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssemblyReport {
    /// Labels chosen among overlapping words because the community had no other member.
    pub fallback_labels: Vec<String>,
}

/// Turn word communities into a labelled dictionary.
///
/// Polarity is the sign of the mean member polarity (zero counts as
/// positive). The automatic label is the upper-cased non-overlapping member
/// with the largest summed pair score to the rest of its community, ties
/// going to the lexicographically smaller word. `overrides` maps an
/// automatic label or a member word (case-insensitive) to a replacement;
/// a match on the automatic label wins.
pub fn assemble_dictionary(
    communities: &[BTreeSet<String>],
    lex: &SentimentLexicon,
    model: &EmbeddingModel,
    alpha: f64,
    overrides: &BTreeMap<String, String>,
) -> Result<(Vec<Community>, AssemblyReport)> {
    if communities.is_empty() {
        return Err(Error::NoCommunities);
    }
    let mut membership: BTreeMap<&str, usize> = BTreeMap::new();
    for c in communities {
        for w in c {
            *membership.entry(w.as_str()).or_default() += 1;
        }
    }
    let overrides: BTreeMap<String, &String> = overrides.iter().map(|(k, v)| (k.to_uppercase(), v)).collect();

    let mut report = AssemblyReport::default();
    let mut used_labels = BTreeSet::new();
    let mut out = Vec::with_capacity(communities.len());
    for members in communities {
        if members.is_empty() {
            return Err(Error::Invalid("empty community".into()));
        }
        let overlap_words: BTreeSet<String> = members.iter().filter(|w| membership[w.as_str()] > 1).cloned().collect();

        let mut ranked = Vec::with_capacity(members.len());
        for w in members {
            let mut total = 0.0;
            for other in members.iter().filter(|o| *o != w) {
                total += score_sim(model, lex, w, other, alpha)?;
            }
            ranked.push((w, total));
        }
        // Highest score first, then lexicographic.
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let exclusive = ranked.iter().find(|(w, _)| !overlap_words.contains(*w));
        let word = match exclusive {
            Some((w, _)) => (*w).clone(),
            None => {
                let (w, _) = ranked
                    .iter()
                    .find(|(w, _)| !used_labels.contains(&w.to_uppercase()))
                    .ok_or_else(|| Error::DuplicateLabel(ranked[0].0.to_uppercase()))?;
                report.fallback_labels.push(w.to_uppercase());
                (*w).clone()
            }
        };
        let auto = word.to_uppercase();
        let label = overrides
            .get(&auto)
            .or_else(|| members.iter().find_map(|m| overrides.get(&m.to_uppercase())))
            .map(|s| s.to_string())
            .unwrap_or(auto);
        if !used_labels.insert(label.clone()) {
            return Err(Error::DuplicateLabel(label));
        }

        let mean_polarity = members.iter().map(|w| lex.polarity(w)).sum::<f64>() / members.len() as f64;
        out.push(Community {
            label,
            polarity: if mean_polarity >= 0.0 {
                Polarity::Positive
            } else {
                Polarity::Negative
            },
            members: members.clone(),
            overlap_words,
            stems: members.iter().map(|w| stem(w)).collect(),
        });
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::TrainConfig;

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn model(words: &[(&str, [f32; 2])]) -> EmbeddingModel {
        EmbeddingModel::from_parts(
            words.iter().map(|(w, _)| w.to_string()).collect(),
            words.iter().flat_map(|(_, v)| v.iter().copied()).collect(),
            TrainConfig {
                m: 2,
                ..TrainConfig::default()
            },
        )
        .unwrap()
    }

    fn lex() -> SentimentLexicon {
        SentimentLexicon::new(
            [
                ("great", 0.6),
                ("amazing", 0.7),
                ("awesome", 0.5),
                ("worst", -0.8),
                ("fake", -0.5),
            ]
            .map(|(w, s)| (w.to_string(), s)),
        )
    }

    #[test]
    fn eq1_cases() {
        assert_eq!(combine_scores(0.7, -0.3, 1.0), 0.7);
        assert!((combine_scores(0.5, 0.0, 0.8) - 0.40).abs() < 1e-12);
        assert!((combine_scores(0.9, 1.0, 0.8) - 0.92).abs() < 1e-12);
    }

    #[test]
    fn graph_is_complete_on_known_words() {
        let m = model(&[
            ("a", [1.0, 0.0]),
            ("b", [0.0, 1.0]),
            ("c", [1.0, 1.0]),
            ("d", [1.0, -1.0]),
        ]);
        let b = build_graph(&set(&["a", "b", "c", "d", "zzz"]), &m, &lex(), 0.8, 2).unwrap();
        assert_eq!(b.graph.vertex_count(), 4);
        assert_eq!(b.graph.edge_count(), 6);
        assert_eq!(b.out_of_vocabulary, vec!["zzz"]);
        assert!(matches!(
            build_graph(&set(&["a", "b"]), &m, &lex(), 0.8, 6),
            Err(Error::TooFewVertices { needed: 6, found: 2 })
        ));
    }

    #[test]
    fn positive_community_polarity_and_label() {
        let m = model(&[("great", [1.0, 0.1]), ("amazing", [1.0, 0.0]), ("awesome", [0.9, 0.2])]);
        let (d, report) = assemble_dictionary(
            &[set(&["great", "amazing", "awesome"])],
            &lex(),
            &m,
            0.8,
            &BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(d[0].polarity, Polarity::Positive);
        assert_eq!(d[0].label, "GREAT");
        assert!(report.fallback_labels.is_empty());
        assert_eq!(d[0].stems, set(&["great", "amaz", "awesom"]));
    }

    #[test]
    fn overlap_words_flagged_and_not_chosen() {
        let m = model(&[
            ("great", [1.0, 0.0]),
            ("amazing", [1.0, 0.1]),
            ("worst", [0.0, 1.0]),
            ("fake", [0.1, 1.0]),
        ]);
        let communities = [set(&["great", "amazing"]), set(&["amazing", "worst", "fake"])];
        let overrides = BTreeMap::from([("fake".to_string(), "CREEPY".to_string())]);
        let (d, _) = assemble_dictionary(&communities, &lex(), &m, 0.8, &overrides).unwrap();
        assert_eq!(d[0].overlap_words, set(&["amazing"]));
        assert_eq!(d[1].overlap_words, set(&["amazing"]));
        assert_eq!(d[0].label, "GREAT");
        assert_eq!(d[1].polarity, Polarity::Negative);
        assert_ne!(d[1].label, "AMAZING");
        assert_eq!(d[1].label, "CREEPY");
    }

    #[test]
    fn overrides_by_member_word() {
        let m = model(&[
            ("great", [1.0, 0.1]),
            ("amazing", [1.0, 0.0]),
            ("worst", [0.0, 1.0]),
            ("fake", [0.1, 1.0]),
        ]);
        let communities = [set(&["great", "amazing"]), set(&["worst", "fake"])];
        let overrides = BTreeMap::from([
            ("Worst".to_string(), "CREEPY".to_string()),
            ("amazing".to_string(), "SPECTACULAR".to_string()),
        ]);
        let (d, _) = assemble_dictionary(&communities, &lex(), &m, 0.8, &overrides).unwrap();
        assert_eq!(d[0].label, "SPECTACULAR");
        assert_eq!(d[1].label, "CREEPY");
    }

    #[test]
    fn all_overlapping_members_fall_back() {
        let m = model(&[("great", [1.0, 0.0]), ("amazing", [1.0, 0.1])]);
        let c = set(&["great", "amazing"]);
        let (d, report) = assemble_dictionary(&[c.clone(), c], &lex(), &m, 0.8, &BTreeMap::new()).unwrap();
        assert_eq!(report.fallback_labels.len(), 2);
        assert_ne!(d[0].label, d[1].label);
    }

    #[test]
    fn no_communities_is_an_error() {
        let m = model(&[("great", [1.0, 0.0])]);
        assert!(matches!(
            assemble_dictionary(&[], &lex(), &m, 0.8, &BTreeMap::new()),
            Err(Error::NoCommunities)
        ));
    }

    #[test]
    fn dictionary_roundtrip_and_stem_index() {
        let m = model(&[("great", [1.0, 0.0]), ("amazing", [1.0, 0.1]), ("worst", [0.0, 1.0])]);
        let communities = [set(&["great", "amazing"]), set(&["amazing", "worst"])];
        let (c, _) = assemble_dictionary(&communities, &lex(), &m, 0.8, &BTreeMap::new()).unwrap();
        let dict = UopDictionary::new(c, 0.8, 1.13, 2).unwrap();
        let union: BTreeSet<&String> = dict.communities.iter().flat_map(|c| &c.stems).collect();
        let keys: BTreeSet<&String> = dict.stem_index().keys().collect();
        assert_eq!(union, keys);
        assert_eq!(dict.communities_for_stem("amaz").unwrap().len(), 2);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dict.json");
        dict.save(&p).unwrap();
        assert_eq!(UopDictionary::load(&p).unwrap(), dict);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let c = Community {
            label: "GREAT".into(),
            polarity: Polarity::Positive,
            members: set(&["great"]),
            overlap_words: BTreeSet::new(),
            stems: set(&["great"]),
        };
        assert!(matches!(
            UopDictionary::new(vec![c.clone(), c], 0.8, 1.13, 6),
            Err(Error::DuplicateLabel(_))
        ));
    }
}
