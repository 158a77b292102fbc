use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which endpoint thresholds an edge has to beat to survive pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PruneRule {
    /// Keep an edge only when its weight exceeds the thresholds of both endpoints.
    #[default]
    Both,
    /// Keep an edge when its weight exceeds the threshold of either endpoint.
    Either,
}

/// Divisor used for the across-neighborhood standard deviation of z-scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StdDivisor {
    #[default]
    Population,
    Sample,
}

/// Where the nearest same-polarity counterpart of an external point is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CounterpartScope {
    #[default]
    SameNeighborhood,
    CityWide,
}

/// Every tunable of the dictionary and extraction pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Weight of embedding similarity against sentiment similarity in pair scores.
    pub alpha: f64,
    /// Restriction level of the per-vertex pruning threshold.
    pub beta: f64,
    /// Clique size used for percolation.
    pub k: usize,
    /// Window size; context words lie at most `ws - 1` positions away.
    pub ws: usize,
    pub min_count: usize,
    /// Embedding dimension.
    pub m: usize,
    pub thresh_spatial: usize,
    pub thresh_semantic: f64,
    pub min_cluster_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Training threads. Anything above 1 gives run-dependent vectors.
    pub workers: usize,
    pub prune_rule: PruneRule,
    pub std_divisor: StdDivisor,
    pub counterpart_scope: CounterpartScope,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            alpha: 0.8,
            beta: 1.13,
            k: 6,
            ws: 8,
            min_count: 20,
            m: 300,
            thresh_spatial: 10,
            thresh_semantic: 18.0,
            min_cluster_size: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 1,
            workers: 1,
            prune_rule: PruneRule::Both,
            std_divisor: StdDivisor::Population,
            counterpart_scope: CounterpartScope::SameNeighborhood,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if self.k < 2 {
            return fail(format!("k must be >= 2, got {}", self.k));
        }
        if !self.thresh_semantic.is_finite() {
            return fail("thresh_semantic must be finite".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, value) in [
            ("ws", self.ws),
            ("min_count", self.min_count),
            ("m", self.m),
            ("thresh_spatial", self.thresh_spatial),
            ("min_cluster_size", self.min_cluster_size),
            ("epochs", self.epochs),
            ("workers", self.workers),
        ] {
            if value == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        Ok(())
    }
}
