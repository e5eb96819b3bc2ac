use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Standardizer;
use crate::linalg::{self, Matrix};

/// Relative pivot tolerance for the normal equations.
pub const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
    pub fit_intercept: bool,
    pub active_features: Vec<usize>,
    /// Applied to inputs before `weights`; identity when fitted on
    /// already-standardized data.
    pub standardizer: Standardizer,
}

/// Closed-form ridge regression on `x` as given.
///
/// Minimizes `‖y − Xw − b‖² + alpha·‖w‖²` with an unpenalized intercept:
/// with `fit_intercept`, `y` and the columns of `x` are centered, the system
/// `(XᵀX + alpha·I)w = Xᵀy` is solved, and `b = ȳ − x̄ᵀw`.
pub fn fit_linear(x: &Matrix, y: &[f64], alpha: f64, fit_intercept: bool) -> Result<LinearModel> {
    let (n, d) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if alpha < 0.0 || alpha.is_nan() {
        return Err(Error::InvalidConfig(format!("ridge alpha must be non-negative, got {alpha}")));
    }
    if n == 0 {
        return Err(Error::TooFewRows { rows: 0, required: 1 });
    }

    let (x_mean, y_mean) = if fit_intercept {
        let mut xm = vec![0.0; d];
        for row in x.rows() {
            for (m, v) in xm.iter_mut().zip(row) {
                *m += v;
            }
        }
        xm.iter_mut().for_each(|m| *m /= n as f64);
        (xm, y.iter().sum::<f64>() / n as f64)
    } else {
        (vec![0.0; d], 0.0)
    };

    let mut gram = Matrix::zeros(d, d);
    let mut rhs = vec![0.0; d];
    let mut centered = vec![0.0; d];
    for (row, &target) in x.rows().zip(y) {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&x_mean) {
            *c = v - m;
        }
        let t = target - y_mean;
        for i in 0..d {
            rhs[i] += centered[i] * t;
            for j in i..d {
                let v = gram.get(i, j) + centered[i] * centered[j];
                gram.set(i, j, v);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram.set(i, j, gram.get(j, i));
        }
        gram.set(i, i, gram.get(i, i) + alpha);
    }

    let weights = if d == 0 {
        Vec::new()
    } else {
        linalg::solve(&gram, &rhs, SINGULAR_PIVOT)?
    };
    let intercept = if fit_intercept {
        y_mean - x_mean.iter().zip(&weights).map(|(m, w)| m * w).sum::<f64>()
    } else {
        0.0
    };
    Ok(LinearModel {
        weights,
        intercept,
        alpha,
        fit_intercept,
        active_features: (0..d).collect(),
        standardizer: Standardizer::identity(d),
    })
}

/// Fits a standardizer on `x`, then ridge on the standardized matrix.
pub fn fit_linear_standardized(
    x: &Matrix,
    y: &[f64],
    alpha: f64,
    fit_intercept: bool,
) -> Result<LinearModel> {
    let standardizer = Standardizer::fit(x)?;
    let z = standardizer.apply(x)?;
    let mut model = fit_linear(&z, y, alpha, fit_intercept)?;
    model.standardizer = standardizer;
    Ok(model)
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: x.ncols(),
            });
        }
        let z = self.standardizer.apply(x)?;
        Ok(z
            .rows()
            .map(|row| {
                self.intercept + row.iter().zip(&self.weights).map(|(v, w)| v * w).sum::<f64>()
            })
            .collect())
    }

    /// `|w|` in standardized space.
    pub fn feature_importance(&self) -> Result<Vec<f64>> {
        if self.weights.is_empty() {
            return Err(Error::UnfittedModel);
        }
        Ok(self.weights.iter().map(|w| w.abs()).collect())
    }
}

pub fn predict_linear(model: &LinearModel, x: &Matrix) -> Result<Vec<f64>> {
    model.predict(x)
}
