use super::ModelSpec;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Recursive feature elimination down to `target_count` columns.
///
/// Each round refits `spec` (and its standardizer) on the surviving columns
/// and drops the one with the lowest importance, the lowest index on ties.
/// Returns the surviving column indices in ascending order.
pub fn rfe(x: &Matrix, y: &[f64], spec: &ModelSpec, target_count: usize) -> Result<Vec<usize>> {
    let mut trace = rfe_trace(x, y, spec, target_count)?;
    Ok(trace.pop().unwrap_or_default())
}

/// Active sets after every round, starting with all columns.
pub fn rfe_trace(
    x: &Matrix,
    y: &[f64],
    spec: &ModelSpec,
    target_count: usize,
) -> Result<Vec<Vec<usize>>> {
    let d = x.ncols();
    if target_count == 0 || target_count > d {
        return Err(Error::InvalidConfig(format!(
            "RFE target must be in 1..={d}, got {target_count}"
        )));
    }
    let mut active: Vec<usize> = (0..d).collect();
    let mut trace = vec![active.clone()];
    while active.len() > target_count {
        let model = spec.fit(&x.select_columns(&active), y)?;
        let importance = model.feature_importance()?;
        let mut weakest = 0;
        for (i, &v) in importance.iter().enumerate() {
            if v < importance[weakest] {
                weakest = i;
            }
        }
        active.remove(weakest);
        trace.push(active.clone());
    }
    Ok(trace)
}
