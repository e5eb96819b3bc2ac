use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::{r_squared, spearman};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::linalg::Matrix;
use crate::pipeline::{PipelineConfig, TrainedPipeline};
use crate::rng;

pub const DEFAULT_FOLDS: usize = 5;
const MIN_TEST_USERS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_assignments: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldSplit {
    pub fn n(&self) -> usize {
        self.fold_assignments.len()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.fold_assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.fold_assignments[i] != fold)
            .collect()
    }
}

/// Seeded shuffle of `0..n` dealt round-robin into `k` folds.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 || n < k {
        return Err(Error::TooFewUsers { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::STREAM_FOLDS, 0));
    let mut fold_assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_assignments[i] = pos % k;
    }
    Ok(FoldSplit {
        fold_assignments,
        k,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub r2: f64,
    pub rs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScores {
    /// Mean of the per-fold values.
    pub r2: f64,
    pub rs: f64,
    pub folds: Vec<FoldScore>,
}

/// Runs `fit_predict(train, test)` per fold and averages R² and Spearman
/// computed on each fold's test rows.
pub fn cross_validate<F>(targets: &[f64], folds: &FoldSplit, mut fit_predict: F) -> Result<CvScores>
where
    F: FnMut(&[usize], &[usize]) -> Result<Vec<f64>>,
{
    if targets.len() != folds.n() {
        return Err(Error::LengthMismatch {
            left: targets.len(),
            right: folds.n(),
        });
    }
    let mut scores = Vec::with_capacity(folds.k);
    for fold in 0..folds.k {
        let test = folds.test_indices(fold);
        if test.len() < MIN_TEST_USERS {
            return Err(Error::InvalidFold {
                fold,
                size: test.len(),
            });
        }
        let train = folds.train_indices(fold);
        let preds = fit_predict(&train, &test)?;
        let truth: Vec<f64> = test.iter().map(|&i| targets[i]).collect();
        scores.push(FoldScore {
            r2: r_squared(&truth, &preds)?,
            rs: spearman(&truth, &preds)?,
        });
    }
    let k = scores.len() as f64;
    Ok(CvScores {
        r2: scores.iter().map(|s| s.r2).sum::<f64>() / k,
        rs: scores.iter().map(|s| s.rs).sum::<f64>() / k,
        folds: scores,
    })
}

/// Fits `config` on the training rows of `fold` only.
pub fn fit_fold(
    raw: &Matrix,
    influence: &[f64],
    folds: &FoldSplit,
    fold: usize,
    config: &PipelineConfig,
) -> Result<TrainedPipeline> {
    fit_rows(raw, influence, &folds.train_indices(fold), config)
}

fn fit_rows(raw: &Matrix, influence: &[f64], rows: &[usize], config: &PipelineConfig) -> Result<TrainedPipeline> {
    let y: Vec<f64> = rows.iter().map(|&i| influence[i]).collect();
    TrainedPipeline::fit(config, &raw.select_rows(rows), &y)
}

/// Cross-validated R² and Spearman of one pipeline configuration.
pub fn evaluate_config(dataset: &Dataset, config: &PipelineConfig, folds: &FoldSplit) -> Result<CvScores> {
    let table = FeatureTable::from_dataset(dataset, false)?;
    evaluate_table(&table, config, folds)
}

pub fn evaluate_table(table: &FeatureTable, config: &PipelineConfig, folds: &FoldSplit) -> Result<CvScores> {
    cross_validate(&table.influence, folds, |train, test| {
        let model = fit_rows(&table.features, &table.influence, train, config)?;
        model.predict(&table.features.select_rows(test))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_and_uneven_folds() {
        let f = kfold_split(10, 5, 1).unwrap();
        let mut sizes: Vec<usize> = (0..5).map(|k| f.test_indices(k).len()).collect();
        assert_eq!(sizes, vec![2; 5]);
        let f = kfold_split(11, 5, 1).unwrap();
        sizes = (0..5).map(|k| f.test_indices(k).len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
        assert_eq!(kfold_split(11, 5, 1).unwrap(), f);
        assert_ne!(kfold_split(11, 5, 2).unwrap(), f);
        assert!(matches!(kfold_split(3, 5, 0), Err(Error::TooFewUsers { .. })));
    }

    #[test]
    fn oracle_predictor_scores_perfectly() {
        let y: Vec<f64> = (0..40).map(|i| ((i * 37) % 41) as f64).collect();
        let folds = kfold_split(40, 5, 3).unwrap();
        let s = cross_validate(&y, &folds, |_, test| Ok(test.iter().map(|&i| y[i]).collect())).unwrap();
        assert_eq!((s.r2, s.rs), (1.0, 1.0));
    }

    #[test]
    fn train_mean_predictor_scores_near_zero() {
        let y: Vec<f64> = (0..100).map(|i| ((i * 53) % 97) as f64 + (i as f64).sqrt()).collect();
        let folds = kfold_split(100, 5, 4).unwrap();
        let mut r2s = Vec::new();
        let _ = cross_validate(&y, &folds, |train, test| {
            let mean = train.iter().map(|&i| y[i]).sum::<f64>() / train.len() as f64;
            let truth: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            r2s.push(r_squared(&truth, &vec![mean; test.len()]).unwrap());
            // Break ties so Spearman is defined.
            Ok(test.iter().map(|&i| mean + i as f64 * 1e-9).collect())
        })
        .unwrap();
        assert!(r2s.iter().all(|&r| r <= 0.0), "{r2s:?}");
    }

    #[test]
    fn tiny_folds_are_rejected() {
        let y: Vec<f64> = (0..10).map(f64::from).collect();
        let folds = kfold_split(10, 5, 0).unwrap();
        assert!(matches!(
            cross_validate(&y, &folds, |_, t| Ok(t.iter().map(|&i| y[i]).collect())),
            Err(Error::InvalidFold { size: 2, .. })
        ));
    }
}
