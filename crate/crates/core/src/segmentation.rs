//! One-dimensional k-means over (scaled) follower counts and the per-cluster
//! regression meta-model built on it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{log_scale, FOLLOWERS};
use crate::linalg::Matrix;
use crate::models::{Model, ModelSpec};
use crate::rng;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans1D {
    /// Strictly ascending.
    pub centroids: Vec<f64>,
    pub inertia: f64,
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl KMeans1D {
    pub fn assign(&self, value: f64) -> usize {
        assign_cluster(value, &self.centroids)
    }

    /// Sum of squared distances from each value to its nearest centroid.
    pub fn inertia_of(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .map(|&v| {
                let c = self.centroids[self.assign(v)];
                (v - c) * (v - c)
            })
            .sum()
    }
}

/// Index of the nearest centroid; equidistant values go to the lower index.
pub fn assign_cluster(value: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, &c) in centroids.iter().enumerate() {
        let dist = (value - c).abs();
        if dist < best_dist {
            best = i;
            best_dist = dist;
        }
    }
    best
}

/// One Lloyd run from a given initialization.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub centroids: Vec<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub history: Vec<f64>,
}

fn inertia(values: &[f64], centroids: &[f64], assignments: &[usize]) -> f64 {
    values
        .iter()
        .zip(assignments)
        .map(|(v, &a)| (v - centroids[a]) * (v - centroids[a]))
        .sum()
}

fn sort_centroids(c: &mut [f64]) {
    c.sort_by(f64::total_cmp);
}

/// Lloyd iterations until the assignment stops changing or
/// [`MAX_LLOYD_ITERATIONS`] is reached, followed by local refinement
/// (single-point transfers, then merge/split moves) with Lloyd re-run after
/// each accepted move. An emptied cluster is moved onto the value farthest
/// from its current centroid.
pub fn lloyd(values: &[f64], init: Vec<f64>) -> LloydRun {
    let mut centroids = init;
    sort_centroids(&mut centroids);
    let mut assignments: Vec<usize> = values.iter().map(|&v| assign_cluster(v, &centroids)).collect();
    let mut history = vec![inertia(values, &centroids, &assignments)];
    loop {
        lloyd_iterate(values, &mut centroids, &mut assignments, &mut history);
        if hartigan_refine(values, &mut centroids, &mut assignments) {
            history.push(inertia(values, &centroids, &assignments));
        }
        if !merge_split_refine(values, &mut centroids, &mut assignments) {
            break;
        }
        history.push(inertia(values, &centroids, &assignments));
    }
    LloydRun {
        inertia: inertia(values, &centroids, &assignments),
        centroids,
        assignments,
        history,
    }
}

fn lloyd_iterate(values: &[f64], centroids: &mut [f64], assignments: &mut Vec<usize>, history: &mut Vec<f64>) {
    let k = centroids.len();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &a) in values.iter().zip(assignments.iter()) {
            sums[a] += v;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let mut far = 0;
                let mut far_dist = -1.0;
                for (i, (&v, &a)) in values.iter().zip(assignments.iter()).enumerate() {
                    let dist = (v - centroids[a]).abs();
                    if dist > far_dist {
                        far = i;
                        far_dist = dist;
                    }
                }
                centroids[j] = values[far];
                assignments[far] = j;
            }
        }
        sort_centroids(centroids);
        let next: Vec<usize> = values.iter().map(|&v| assign_cluster(v, centroids)).collect();
        history.push(inertia(values, centroids, &next));
        let converged = next == *assignments;
        *assignments = next;
        if converged {
            break;
        }
    }
}

/// Moves over pairs of neighbouring clusters: re-cut their union at the best
/// point, or merge them and split another cluster at its best cut. Takes the
/// single move that lowers inertia the most. Clusters of a
/// sorted-centroid fixpoint are contiguous runs of the sorted values, so a
/// partition is a list of run boundaries. Returns whether a move was taken;
/// the new run means become the centroids.
fn merge_split_refine(values: &[f64], centroids: &mut [f64], assignments: &mut [usize]) -> bool {
    let k = centroids.len();
    if k < 2 {
        return false;
    }
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    if counts.contains(&0) {
        return false;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut s1 = vec![0.0; n + 1];
    for (i, &v) in sorted.iter().enumerate() {
        s1[i + 1] = s1[i] + v;
    }
    // Exact segment SSE: subtract the mean explicitly to avoid cancellation.
    let sse = |i: usize, j: usize| {
        let m = (s1[j] - s1[i]) / (j - i) as f64;
        sorted[i..j].iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    let mut bounds = vec![0usize; k + 1];
    for j in 0..k {
        bounds[j + 1] = bounds[j] + counts[j];
    }
    let costs: Vec<f64> = (0..k).map(|j| sse(bounds[j], bounds[j + 1])).collect();
    let total: f64 = costs.iter().sum();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |cand: f64, cuts: Vec<usize>| {
        if cand < total - 1e-12 * total.max(1e-300) && best.as_ref().is_none_or(|b| cand < b.0) {
            best = Some((cand, cuts));
        }
    };
    for j in 0..k - 1 {
        let (lo, hi) = (bounds[j], bounds[j + 2]);
        let merged = sse(lo, hi);
        // Best cut of the union of two neighbours.
        for cut in lo + 1..hi {
            if cut == bounds[j + 1] || sorted[cut - 1] == sorted[cut] {
                continue;
            }
            let cand = total - costs[j] - costs[j + 1] + sse(lo, cut) + sse(cut, hi);
            let mut cuts = bounds.clone();
            cuts[j + 1] = cut;
            consider(cand, cuts);
        }
        for m in (0..k).filter(|&m| m != j && m != j + 1) {
            let (lo, hi) = (bounds[m], bounds[m + 1]);
            if hi - lo < 2 {
                continue;
            }
            for cut in lo + 1..hi {
                if sorted[cut - 1] == sorted[cut] {
                    continue;
                }
                let cand = total - costs[j] - costs[j + 1] - costs[m] + merged + sse(lo, cut) + sse(cut, hi);
                let mut cuts: Vec<usize> = bounds
                    .iter()
                    .copied()
                    .filter(|&b| b != bounds[j + 1])
                    .collect();
                cuts.push(cut);
                cuts.sort_unstable();
                consider(cand, cuts);
            }
        }
    }
    let Some((_, cuts)) = best else {
        return false;
    };
    for j in 0..k {
        centroids[j] = (s1[cuts[j + 1]] - s1[cuts[j]]) / (cuts[j + 1] - cuts[j]) as f64;
    }
    sort_centroids(centroids);
    for (a, &v) in assignments.iter_mut().zip(values) {
        *a = assign_cluster(v, centroids);
    }
    true
}

/// Single-point transfers (Hartigan's rule) applied to a Lloyd fixpoint:
/// moving `v` from cluster `a` to `b` changes inertia by
/// `n_b/(n_b+1)·(v−c_b)² − n_a/(n_a−1)·(v−c_a)²`; strictly improving moves
/// are taken until none remain. The result is again a Lloyd fixpoint with
/// sorted centroids. Returns whether anything moved.
fn hartigan_refine(values: &[f64], centroids: &mut [f64], assignments: &mut [usize]) -> bool {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k];
    for (&v, &a) in values.iter().zip(assignments.iter()) {
        counts[a] += 1;
        sums[a] += v;
    }
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for (i, &v) in values.iter().enumerate() {
            let a = assignments[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let ca = sums[a] / na;
            let remove_gain = na / (na - 1.0) * (v - ca) * (v - ca);
            let mut best = None;
            let mut best_delta = 0.0;
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let cb = sums[b] / nb;
                let delta = nb / (nb + 1.0) * (v - cb) * (v - cb) - remove_gain;
                // relative margin keeps rounding noise from cycling
                if delta < best_delta - 1e-12 * remove_gain.max(1e-300) {
                    best = Some(b);
                    best_delta = delta;
                }
            }
            if let Some(b) = best {
                counts[a] -= 1;
                sums[a] -= v;
                counts[b] += 1;
                sums[b] += v;
                assignments[i] = b;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    if moved_any {
        for j in 0..k {
            centroids[j] = sums[j] / counts[j] as f64;
        }
        // Recompute means exactly and restore the sorted/nearest invariants.
        loop {
            sort_centroids(centroids);
            let next: Vec<usize> = values.iter().map(|&v| assign_cluster(v, centroids)).collect();
            let mut s = vec![0.0; k];
            let mut c = vec![0usize; k];
            for (&v, &a) in values.iter().zip(&next) {
                s[a] += v;
                c[a] += 1;
            }
            let stable = next.as_slice() == &*assignments;
            assignments.copy_from_slice(&next);
            for j in 0..k {
                if c[j] > 0 {
                    centroids[j] = s[j] / c[j] as f64;
                }
            }
            if stable {
                break;
            }
        }
    }
    moved_any
}

/// k-means++ seeding: first centroid uniform, the rest drawn proportionally
/// to squared distance from the nearest chosen centroid.
pub fn kmeans_plus_plus<R: Rng>(values: &[f64], k: usize, rng: &mut R) -> Vec<f64> {
    let mut centroids = vec![values[rng.random_range(0..values.len())]];
    let mut d2: Vec<f64> = values
        .iter()
        .map(|&v| (v - centroids[0]) * (v - centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just above the final sum.
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..values.len())
        };
        let c = values[pick];
        centroids.push(c);
        for (d, &v) in d2.iter_mut().zip(values) {
            *d = d.min((v - c) * (v - c));
        }
    }
    centroids
}

fn count_distinct(values: &[f64]) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len()
}

/// Best of `restarts` k-means++/Lloyd runs by inertia (earliest restart
/// wins ties). Restart `r` is seeded from `(seed, r)`.
pub fn fit_kmeans_1d(values: &[f64], k: usize, restarts: usize, seed: u64) -> Result<KMeans1D> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("k-means input must be finite".into()));
    }
    let distinct = count_distinct(values);
    if k == 0 || distinct < k {
        return Err(Error::TooFewDistinctValues { distinct, k });
    }
    let restarts = restarts.max(1);
    let mut best: Option<LloydRun> = None;
    for r in 0..restarts {
        let mut rng = rng::stream(seed, rng::STREAM_KMEANS, r as u64);
        let run = lloyd(values, kmeans_plus_plus(values, k, &mut rng));
        let ascending = run.centroids.windows(2).all(|w| w[0] < w[1]);
        if ascending && best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.ok_or(Error::TooFewDistinctValues { distinct, k })?;
    Ok(KMeans1D {
        centroids: best.centroids,
        inertia: best.inertia,
        k,
        restarts,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRegressionModel {
    /// Fitted on `log_scale(followers)`.
    pub kmeans: KMeans1D,
    pub cluster_models: Vec<Model>,
    /// Column of the raw follower count in the full feature table.
    pub followers_feature_index: usize,
}

fn scaled_followers(followers_raw: &[f64]) -> Result<Vec<f64>> {
    followers_raw.iter().map(|&f| log_scale(f)).collect()
}

/// Splits rows into `k` follower segments and fits one `spec` model per
/// segment on that segment's rows only.
pub fn fit_multi(
    x: &Matrix,
    y: &[f64],
    followers_raw: &[f64],
    k: usize,
    spec: &ModelSpec,
    seed: u64,
) -> Result<MultiRegressionModel> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if followers_raw.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: followers_raw.len(),
        });
    }
    let scaled = scaled_followers(followers_raw)?;
    let kmeans_seed = rng::derive_seed(seed, rng::STREAM_MULTI, 0);
    let kmeans = fit_kmeans_1d(&scaled, k, DEFAULT_RESTARTS, kmeans_seed)?;
    let mut members = vec![Vec::new(); k];
    for (i, &v) in scaled.iter().enumerate() {
        members[kmeans.assign(v)].push(i);
    }
    let required = spec.min_rows(x.ncols());
    if let Some((cluster, rows)) = members.iter().enumerate().find(|(_, m)| m.len() < required) {
        return Err(Error::ClusterTooSmall {
            cluster,
            size: rows.len(),
            required,
        });
    }
    let cluster_models = members
        .iter()
        .map(|rows| {
            let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
            spec.fit(&x.select_rows(rows), &ys)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiRegressionModel {
        kmeans,
        cluster_models,
        followers_feature_index: FOLLOWERS,
    })
}

impl MultiRegressionModel {
    /// Cluster index for each row.
    pub fn route(&self, followers_raw: &[f64]) -> Result<Vec<usize>> {
        Ok(scaled_followers(followers_raw)?
            .into_iter()
            .map(|v| self.kmeans.assign(v))
            .collect())
    }

    pub fn predict(&self, x: &Matrix, followers_raw: &[f64]) -> Result<Vec<f64>> {
        if followers_raw.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: followers_raw.len(),
            });
        }
        let routes = self.route(followers_raw)?;
        let mut out = vec![0.0; x.nrows()];
        for (cluster, model) in self.cluster_models.iter().enumerate() {
            let rows: Vec<usize> = (0..x.nrows()).filter(|&i| routes[i] == cluster).collect();
            if rows.is_empty() {
                continue;
            }
            let preds = model.predict(&x.select_rows(&rows))?;
            for (&i, p) in rows.iter().zip(preds) {
                out[i] = p;
            }
        }
        Ok(out)
    }
}

pub fn predict_multi(model: &MultiRegressionModel, x: &Matrix, followers_raw: &[f64]) -> Result<Vec<f64>> {
    model.predict(x, followers_raw)
}
