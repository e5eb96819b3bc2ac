use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, presort, GrowParams, RegressionTree};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    /// `None` means `⌈d/3⌉` for `d` input features.
    pub max_features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            min_samples_leaf: 5,
            max_features_per_split: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl ForestConfig {
    pub fn resolved_max_features(&self, d: usize) -> usize {
        self.max_features_per_split.unwrap_or(d.div_ceil(3))
    }

    fn validate(&self, d: usize) -> Result<usize> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig("min_samples_leaf must be at least 1".into()));
        }
        let m = self.resolved_max_features(d);
        if m == 0 || m > d {
            return Err(Error::InvalidConfig(format!(
                "max_features_per_split must be in 1..={d}, got {m}"
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub config: ForestConfig,
    pub n_features: usize,
    pub active_features: Vec<usize>,
    /// Range of the training targets; predictions never leave it.
    pub target_min: f64,
    pub target_max: f64,
    /// Total squared-error reduction per feature, summed over trees.
    pub split_gain: Vec<f64>,
}

/// Bagged CART forest. Tree `t` draws its bootstrap sample and per-node
/// feature subsets from streams derived from `(config.seed, t)`, so the
/// result does not depend on how trees are scheduled across threads.
pub fn fit_forest(x: &Matrix, y: &[f64], config: &ForestConfig) -> Result<ForestModel> {
    let (n, d) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    let max_features = config.validate(d)?;
    let required = 2 * config.min_samples_leaf;
    if n < required {
        return Err(Error::TooFewSamples { n, required });
    }
    let presorted = presort(x);
    let grown = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = rng::derive_seed(config.seed, rng::STREAM_TREE, t as u64);
            let counts = if config.bootstrap {
                let mut rng = rng::stream(tree_seed, rng::STREAM_BOOTSTRAP, 0);
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                counts
            } else {
                vec![1u32; n]
            };
            let params = GrowParams {
                min_samples_leaf: config.min_samples_leaf,
                max_features,
                seed: tree_seed,
            };
            grow_tree(x, y, &counts, &presorted, params)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut split_gain = vec![0.0; d];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, gain) in grown {
        for (total, g) in split_gain.iter_mut().zip(gain) {
            *total += g;
        }
        trees.push(tree);
    }
    let target_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let target_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ForestModel {
        trees,
        config: config.clone(),
        n_features: d,
        active_features: (0..d).collect(),
        target_min,
        target_max,
        split_gain,
    })
}

impl ForestModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        if self.trees.is_empty() {
            return Err(Error::UnfittedModel);
        }
        let k = self.trees.len() as f64;
        Ok(x.rows()
            .map(|row| {
                let total: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                (total / k).clamp(self.target_min, self.target_max)
            })
            .collect())
    }

    /// Split gain per feature normalized to sum 1; all zeros when no tree split.
    pub fn feature_importance(&self) -> Result<Vec<f64>> {
        if self.trees.is_empty() {
            return Err(Error::UnfittedModel);
        }
        let total: f64 = self.split_gain.iter().sum();
        if total <= 0.0 {
            return Ok(vec![0.0; self.n_features]);
        }
        Ok(self.split_gain.iter().map(|g| g / total).collect())
    }
}

pub fn predict_forest(model: &ForestModel, x: &Matrix) -> Result<Vec<f64>> {
    model.predict(x)
}
