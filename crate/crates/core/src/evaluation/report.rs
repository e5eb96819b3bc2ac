use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cv::{evaluate_table, kfold_split, CvScores, DEFAULT_FOLDS};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{FeatureTable, FOLLOWERS, LIKES_AVG};
use crate::models::{ForestConfig, ModelSpec, DEFAULT_RIDGE_ALPHA};
use crate::pipeline::{FeatureSelection, PipelineConfig};
use crate::segmentation::DEFAULT_K;

pub const ROW_LABELS: [&str; 6] = [
    "full Ridge Regression",
    "full Random Forest",
    "minimal Ridge Regression",
    "minimal Random Forest",
    "Followers Baseline",
    "Likes Baseline",
];

/// Feature count kept by the minimal (RFE) models.
pub const MINIMAL_FEATURES: usize = 4;
pub const MIN_BENCHMARK_USERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model_name: String,
    pub r2_regression: f64,
    pub rs_regression: f64,
    pub r2_multi: f64,
    pub rs_multi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub n_users: usize,
    pub k_folds: usize,
    pub k_clusters: usize,
    /// Caller-supplied; never read from the clock.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub metadata: ReportMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    pub seed: u64,
    pub k_folds: usize,
    pub k_clusters: usize,
    pub ridge_alpha: f64,
    pub forest: ForestConfig,
    pub timestamp: Option<String>,
}

impl BenchmarkOptions {
    pub fn new(seed: u64) -> Self {
        BenchmarkOptions {
            seed,
            k_folds: DEFAULT_FOLDS,
            k_clusters: DEFAULT_K,
            ridge_alpha: DEFAULT_RIDGE_ALPHA,
            forest: ForestConfig {
                seed,
                ..ForestConfig::default()
            },
            timestamp: None,
        }
    }
}

/// The six plain (unsegmented) configurations, in report order.
pub fn benchmark_configs(options: &BenchmarkOptions) -> Vec<(&'static str, PipelineConfig)> {
    let ridge = ModelSpec::Ridge {
        alpha: options.ridge_alpha,
    };
    let forest = ModelSpec::Forest(options.forest.clone());
    let model = |spec: &ModelSpec, selection| PipelineConfig {
        selection,
        ..PipelineConfig::new(spec.clone(), options.seed)
    };
    let baseline = |column: usize| PipelineConfig {
        spec: ModelSpec::Ridge { alpha: 0.0 },
        selection: FeatureSelection::Columns {
            indices: vec![column],
        },
        transform_scales: false,
        ..PipelineConfig::new(ModelSpec::ridge(), options.seed)
    };
    let rfe = || FeatureSelection::Rfe {
        target: MINIMAL_FEATURES,
    };
    vec![
        (ROW_LABELS[0], model(&ridge, FeatureSelection::All)),
        (ROW_LABELS[1], model(&forest, FeatureSelection::All)),
        (ROW_LABELS[2], model(&ridge, rfe())),
        (ROW_LABELS[3], model(&forest, rfe())),
        (ROW_LABELS[4], baseline(FOLLOWERS)),
        (ROW_LABELS[5], baseline(LIKES_AVG)),
    ]
}

/// Cross-validates every configuration with and without follower
/// segmentation on one shared fold split.
pub fn run_benchmark_with(dataset: &Dataset, options: &BenchmarkOptions) -> Result<EvalReport> {
    if dataset.len() < MIN_BENCHMARK_USERS {
        return Err(Error::TooFewUsers {
            n: dataset.len(),
            k: options.k_folds,
        });
    }
    let table = FeatureTable::from_dataset(dataset, false)?;
    let folds = kfold_split(table.len(), options.k_folds, options.seed)?;
    let mut rows = Vec::new();
    for (label, plain) in benchmark_configs(options) {
        let multi = PipelineConfig {
            multi_k: Some(options.k_clusters),
            ..plain.clone()
        };
        let a: CvScores = evaluate_table(&table, &plain, &folds)?;
        let b: CvScores = evaluate_table(&table, &multi, &folds)?;
        rows.push(ReportRow {
            model_name: label.to_string(),
            r2_regression: a.r2,
            rs_regression: a.rs,
            r2_multi: b.r2,
            rs_multi: b.rs,
        });
    }
    Ok(EvalReport {
        rows,
        metadata: ReportMetadata {
            seed: options.seed,
            n_users: dataset.len(),
            k_folds: options.k_folds,
            k_clusters: options.k_clusters,
            timestamp: options.timestamp.clone(),
        },
    })
}

pub fn run_benchmark(dataset: &Dataset, seed: u64) -> Result<EvalReport> {
    run_benchmark_with(dataset, &BenchmarkOptions::new(seed))
}

impl EvalReport {
    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model_name == label)
    }

    /// Aligned plain-text table, one line per model.
    pub fn to_text_table(&self) -> String {
        let label_width = self
            .rows
            .iter()
            .map(|r| r.model_name.chars().count())
            .max()
            .unwrap_or(0)
            .max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:w$} | {:^17} | {:^17}",
            "",
            "Regression",
            "Multi-Regression",
            w = label_width
        );
        let _ = writeln!(
            out,
            "{:w$} | {:>7}   {:>7} | {:>7}   {:>7}",
            "",
            "R²",
            "r_s",
            "R²",
            "r_s",
            w = label_width
        );
        let _ = writeln!(out, "{}", "-".repeat(label_width + 40));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:w$} | {:>7.3}   {:>7.3} | {:>7.3}   {:>7.3}",
                r.model_name,
                r.r2_regression,
                r.rs_regression,
                r.r2_multi,
                r.rs_multi,
                w = label_width
            );
        }
        let m = &self.metadata;
        let _ = writeln!(
            out,
            "\nseed={} users={} folds={} clusters={}",
            m.seed, m.n_users, m.k_folds, m.k_clusters
        );
        out
    }
}
