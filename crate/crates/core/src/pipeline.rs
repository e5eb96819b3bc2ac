//! End-to-end regressors over the raw eight-column feature table: optional
//! scale transform, feature selection, then a single or per-segment model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{inverse_log_scale, log_scale, transform_matrix, FEATURE_NAMES, FOLLOWERS, N_FEATURES};
use crate::linalg::Matrix;
use crate::models::{rfe, Model, ModelSpec};
use crate::segmentation::{fit_multi, MultiRegressionModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeatureSelection {
    All,
    /// Recursive feature elimination down to `target` columns, on training rows.
    Rfe { target: usize },
    Columns { indices: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub spec: ModelSpec,
    pub selection: FeatureSelection,
    /// Rescale likes_avg and followers with `x / ln x` before fitting.
    pub transform_scales: bool,
    /// Segment users into this many follower clusters, one model each.
    pub multi_k: Option<usize>,
    /// Fit on `log_scale(influence)` and invert predictions.
    #[serde(default)]
    pub log_target: bool,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(spec: ModelSpec, seed: u64) -> Self {
        PipelineConfig {
            spec,
            selection: FeatureSelection::All,
            transform_scales: true,
            multi_k: None,
            log_target: false,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case")]
pub enum FittedModel {
    Single { model: Model },
    Multi { model: MultiRegressionModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub config: PipelineConfig,
    /// Columns of the raw feature table the model consumes.
    pub active_features: Vec<usize>,
    pub feature_names: Vec<String>,
    pub fitted: FittedModel,
}

fn prepare(raw: &Matrix, transform: bool) -> Result<Matrix> {
    if raw.ncols() != N_FEATURES {
        return Err(Error::DimensionMismatch {
            expected: N_FEATURES,
            found: raw.ncols(),
        });
    }
    if transform {
        transform_matrix(raw)
    } else {
        Ok(raw.clone())
    }
}

fn invert_target(p: f64) -> Result<f64> {
    if p <= std::f64::consts::E {
        Ok(p)
    } else {
        inverse_log_scale(p)
    }
}

impl TrainedPipeline {
    /// Fits on a raw feature table (rows of [`FEATURE_NAMES`]) and influence targets.
    pub fn fit(config: &PipelineConfig, raw: &Matrix, influence: &[f64]) -> Result<Self> {
        if influence.len() != raw.nrows() {
            return Err(Error::LengthMismatch {
                left: raw.nrows(),
                right: influence.len(),
            });
        }
        let x = prepare(raw, config.transform_scales)?;
        let target: Vec<f64> = if config.log_target {
            influence.iter().map(|&v| log_scale(v)).collect::<Result<_>>()?
        } else {
            influence.to_vec()
        };
        let active = match &config.selection {
            FeatureSelection::All => (0..N_FEATURES).collect(),
            FeatureSelection::Columns { indices } => {
                if indices.is_empty() || indices.iter().any(|&i| i >= N_FEATURES) {
                    return Err(Error::InvalidConfig(format!("bad feature columns {indices:?}")));
                }
                indices.clone()
            }
            FeatureSelection::Rfe { target: count } => rfe(&x, &target, &config.spec, *count)?,
        };
        let xa = x.select_columns(&active);
        let fitted = match config.multi_k {
            None => {
                let mut model = config.spec.fit(&xa, &target)?;
                model.set_active_features(&active);
                FittedModel::Single { model }
            }
            Some(k) => {
                let followers = raw.column(FOLLOWERS);
                let mut model = fit_multi(&xa, &target, &followers, k, &config.spec, config.seed)?;
                for m in &mut model.cluster_models {
                    m.set_active_features(&active);
                }
                FittedModel::Multi { model }
            }
        };
        Ok(TrainedPipeline {
            config: config.clone(),
            feature_names: active.iter().map(|&i| FEATURE_NAMES[i].to_string()).collect(),
            active_features: active,
            fitted,
        })
    }

    pub fn predict(&self, raw: &Matrix) -> Result<Vec<f64>> {
        let x = prepare(raw, self.config.transform_scales)?;
        let xa = x.select_columns(&self.active_features);
        let preds = match &self.fitted {
            FittedModel::Single { model } => model.predict(&xa)?,
            FittedModel::Multi { model } => model.predict(&xa, &raw.column(FOLLOWERS))?,
        };
        if self.config.log_target {
            preds.into_iter().map(invert_target).collect()
        } else {
            Ok(preds)
        }
    }
}
