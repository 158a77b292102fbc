use std::collections::BTreeMap;

use crate::config::PruneRule;
use crate::error::{Error, Result};

/// Undirected weighted graph over words. Each edge is stored once as `(lo, hi)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordGraph {
    vertices: Vec<String>,
    edges: BTreeMap<(usize, usize), f64>,
    adjacency: Vec<Vec<usize>>,
}

impl WordGraph {
    /// Graph with the given vertices (sorted, deduplicated) and no edges.
    pub fn new(vertices: impl IntoIterator<Item = String>) -> Self {
        let mut vertices: Vec<String> = vertices.into_iter().collect();
        vertices.sort();
        vertices.dedup();
        let adjacency = vec![Vec::new(); vertices.len()];
        WordGraph {
            vertices,
            edges: BTreeMap::new(),
            adjacency,
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) -> Result<()> {
        if u == v {
            return Err(Error::Invalid(format!("self-loop on {:?}", self.vertices[u])));
        }
        if !weight.is_finite() {
            return Err(Error::Invalid("non-finite edge weight".into()));
        }
        let key = (u.min(v), u.max(v));
        if self.edges.insert(key, weight).is_none() {
            self.adjacency[u].push(v);
            self.adjacency[v].push(u);
        }
        Ok(())
    }

    pub fn add_edge_between(&mut self, a: &str, b: &str, weight: f64) -> Result<()> {
        let (u, v) = match (self.index_of(a), self.index_of(b)) {
            (Some(u), Some(v)) => (u, v),
            _ => return Err(Error::Invalid(format!("unknown vertex in edge {a:?}-{b:?}"))),
        };
        self.add_edge(u, v, weight)
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.vertices.binary_search_by(|v| v.as_str().cmp(word)).ok()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.edges.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    fn incident_weights(&self, u: usize) -> impl Iterator<Item = f64> + '_ {
        self.adjacency[u]
            .iter()
            .map(move |&v| self.weight(u, v).expect("adjacent"))
    }

    /// `mean + beta * std` of the weights incident to `u`, where the mean
    /// divides by `|V| - 1` and the variance by `|V| - 2`.
    pub fn threshold_at(&self, u: usize, beta: f64) -> Result<f64> {
        let n = self.vertex_count();
        if n < 3 {
            return Err(Error::TooFewVertices { needed: 3, found: n });
        }
        let mean = self.incident_weights(u).sum::<f64>() / (n - 1) as f64;
        let sq: f64 = self.incident_weights(u).map(|w| (w - mean).powi(2)).sum();
        let std = (sq / (n - 2) as f64).sqrt();
        Ok(mean + beta * std)
    }
}

/// Pruning threshold of the vertex labelled `word`.
pub fn vertex_threshold(graph: &WordGraph, word: &str, beta: f64) -> Result<f64> {
    let u = graph
        .index_of(word)
        .ok_or_else(|| Error::Invalid(format!("{word:?} is not a vertex")))?;
    graph.threshold_at(u, beta)
}

/// Drop light edges, then drop vertices left without edges.
///
/// Thresholds are all computed on the input graph. An edge whose weight is
/// at or below the relevant endpoint threshold(s) is removed.
pub fn prune(graph: &WordGraph, beta: f64, rule: PruneRule) -> Result<WordGraph> {
    let thresholds = (0..graph.vertex_count())
        .map(|u| graph.threshold_at(u, beta))
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<(usize, usize, f64)> = graph
        .edges()
        .filter(|&(u, v, w)| match rule {
            PruneRule::Both => w > thresholds[u] && w > thresholds[v],
            PruneRule::Either => w > thresholds[u] || w > thresholds[v],
        })
        .collect();
    let mut alive = vec![false; graph.vertex_count()];
    for &(u, v, _) in &kept {
        alive[u] = true;
        alive[v] = true;
    }
    let mut pruned = WordGraph::new(
        graph
            .vertices
            .iter()
            .zip(&alive)
            .filter(|(_, &a)| a)
            .map(|(w, _)| w.clone()),
    );
    for (u, v, w) in kept {
        pruned.add_edge_between(&graph.vertices[u], &graph.vertices[v], w)?;
    }
    Ok(pruned)
}
