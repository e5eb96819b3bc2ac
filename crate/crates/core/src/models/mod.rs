//! Regression models: closed-form ridge, bagged CART forests, and recursive
//! feature elimination on top of either.

pub mod forest;
pub mod linear;
pub mod rfe;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Matrix;

pub use forest::{fit_forest, predict_forest, ForestConfig, ForestModel};
pub use linear::{fit_linear, fit_linear_standardized, predict_linear, LinearModel};
pub use rfe::{rfe, rfe_trace};
pub use tree::RegressionTree;

pub const DEFAULT_RIDGE_ALPHA: f64 = 1.0;

/// What to fit, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Standardized inputs, unpenalized intercept. `alpha = 0` is ordinary
    /// least squares.
    Ridge { alpha: f64 },
    Forest(ForestConfig),
}

impl ModelSpec {
    pub fn ridge() -> Self {
        ModelSpec::Ridge {
            alpha: DEFAULT_RIDGE_ALPHA,
        }
    }

    pub fn forest(seed: u64) -> Self {
        ModelSpec::Forest(ForestConfig {
            seed,
            ..ForestConfig::default()
        })
    }

    /// Smallest training set a single model of this kind accepts on `d` features.
    pub fn min_rows(&self, d: usize) -> usize {
        match self {
            ModelSpec::Ridge { .. } => d + 2,
            ModelSpec::Forest(c) => (d + 2).max(2 * c.min_samples_leaf),
        }
    }

    pub fn fit(&self, x: &Matrix, y: &[f64]) -> Result<Model> {
        match self {
            ModelSpec::Ridge { alpha } => {
                fit_linear_standardized(x, y, *alpha, true).map(Model::Linear)
            }
            ModelSpec::Forest(config) => fit_forest(x, y, config).map(Model::Forest),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Linear(LinearModel),
    Forest(ForestModel),
}

impl Model {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            Model::Linear(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
        }
    }

    pub fn feature_importance(&self) -> Result<Vec<f64>> {
        match self {
            Model::Linear(m) => m.feature_importance(),
            Model::Forest(m) => m.feature_importance(),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Linear(m) => m.n_features(),
            Model::Forest(m) => m.n_features,
        }
    }

    pub(crate) fn set_active_features(&mut self, active: &[usize]) {
        match self {
            Model::Linear(m) => m.active_features = active.to_vec(),
            Model::Forest(m) => m.active_features = active.to_vec(),
        }
    }

    pub fn active_features(&self) -> &[usize] {
        match self {
            Model::Linear(m) => &m.active_features,
            Model::Forest(m) => &m.active_features,
        }
    }
}

pub fn feature_importance(model: &Model) -> Result<Vec<f64>> {
    model.feature_importance()
}
