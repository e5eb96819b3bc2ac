//! Network-oblivious influence scoring.
//!
//! A user's influence is the mean number of views per post. The crate
//! ingests per-post engagement counts, derives eight per-user statistics,
//! fits ridge, random-forest and follower-segmented regressors to predict
//! influence, and scores them with cross-validated R² and Spearman rank
//! correlation against single-statistic baselines and a PageRank comparator.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod meta;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod segmentation;
pub mod synth;

pub use dataset::{Dataset, PostRecord, UserAggregate};
pub use error::{Error, Result};
pub use features::{FeatureTable, FeatureVector, Standardizer};
pub use linalg::Matrix;
pub use models::{ForestConfig, Model, ModelSpec};
pub use pipeline::{FeatureSelection, PipelineConfig, TrainedPipeline};
