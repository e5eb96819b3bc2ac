//! CART regression trees grown on presorted feature orders.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Arena-backed binary tree, root at index 0. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TreeDoc", try_from = "TreeDoc")]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

/// Nested persistence form: `{feature, threshold, left, right}` or `{value}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeDoc {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeDoc>,
        right: Box<TreeDoc>,
    },
    Leaf {
        value: f64,
    },
}

impl From<RegressionTree> for TreeDoc {
    fn from(tree: RegressionTree) -> Self {
        fn build(nodes: &[TreeNode], i: usize) -> TreeDoc {
            match nodes[i] {
                TreeNode::Leaf { value } => TreeDoc::Leaf { value },
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => TreeDoc::Split {
                    feature,
                    threshold,
                    left: Box::new(build(nodes, left)),
                    right: Box::new(build(nodes, right)),
                },
            }
        }
        build(&tree.nodes, 0)
    }
}

impl TryFrom<TreeDoc> for RegressionTree {
    type Error = String;

    fn try_from(doc: TreeDoc) -> Result<Self, String> {
        fn push(doc: TreeDoc, nodes: &mut Vec<TreeNode>) -> usize {
            let idx = nodes.len();
            match doc {
                TreeDoc::Leaf { value } => nodes.push(TreeNode::Leaf { value }),
                TreeDoc::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    nodes.push(TreeNode::Leaf { value: f64::NAN });
                    let l = push(*left, nodes);
                    let r = push(*right, nodes);
                    nodes[idx] = TreeNode::Split {
                        feature,
                        threshold,
                        left: l,
                        right: r,
                    };
                }
            }
            idx
        }
        let mut nodes = Vec::new();
        push(doc, &mut nodes);
        Ok(RegressionTree { nodes })
    }
}

impl RegressionTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }
}

/// Row indices sorted by each feature's value (ties by row index).
pub fn presort(x: &Matrix) -> Vec<Vec<u32>> {
    (0..x.ncols())
        .map(|f| {
            let mut order: Vec<u32> = (0..x.nrows() as u32).collect();
            order.sort_by(|&a, &b| {
                x.get(a as usize, f)
                    .total_cmp(&x.get(b as usize, f))
                    .then(a.cmp(&b))
            });
            order
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub min_samples_leaf: usize,
    pub max_features: usize,
    pub seed: u64,
}

/// Grows one tree on the rows with positive `counts` (bootstrap
/// multiplicities). Returns the tree and the per-feature sum of squared-error
/// reductions of its splits.
pub fn grow_tree(
    x: &Matrix,
    y: &[f64],
    counts: &[u32],
    presorted: &[Vec<u32>],
    params: GrowParams,
) -> Result<(RegressionTree, Vec<f64>)> {
    let d = x.ncols();
    if params.max_features == 0 || params.max_features > d {
        return Err(Error::InvalidConfig(format!(
            "max_features_per_split must be in 1..={d}, got {}",
            params.max_features
        )));
    }
    let lists: Vec<Vec<u32>> = presorted
        .iter()
        .map(|order| {
            order
                .iter()
                .copied()
                .filter(|&r| counts[r as usize] > 0)
                .collect()
        })
        .collect();
    let m = lists.first().map_or(0, Vec::len);
    if m == 0 {
        return Err(Error::TooFewSamples { n: 0, required: 1 });
    }
    let mut grower = Grower {
        x,
        y,
        counts,
        lists,
        scratch: Vec::with_capacity(m),
        goes_left: vec![false; x.nrows()],
        params,
        nodes: Vec::new(),
        gain: vec![0.0; d],
    };
    grower.grow(0, m);
    Ok((RegressionTree { nodes: grower.nodes }, grower.gain))
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    counts: &'a [u32],
    lists: Vec<Vec<u32>>,
    scratch: Vec<u32>,
    goes_left: Vec<bool>,
    params: GrowParams,
    nodes: Vec<TreeNode>,
    gain: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    left_len: usize,
    sse: f64,
}

impl Grower<'_> {
    fn grow(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: f64::NAN });

        let mut weight = 0.0;
        let mut sum = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in &self.lists[0][start..end] {
            let (w, t) = (f64::from(self.counts[r as usize]), self.y[r as usize]);
            weight += w;
            sum += w * t;
            lo = lo.min(t);
            hi = hi.max(t);
        }
        let mean = sum / weight;
        let leaf = TreeNode::Leaf {
            value: mean.clamp(lo, hi),
        };
        let min_leaf = self.params.min_samples_leaf as f64;
        if weight < 2.0 * min_leaf || lo == hi {
            self.nodes[id] = leaf;
            return id;
        }

        let mut features: Vec<usize> = (0..self.x.ncols()).collect();
        let mut node_rng = rng::stream(self.params.seed, rng::STREAM_NODE, id as u64);
        features.shuffle(&mut node_rng);
        features.truncate(self.params.max_features);

        // Squared errors are accumulated around the node mean.
        let (mut parent_s, mut parent_sse) = (0.0, 0.0);
        for &r in &self.lists[0][start..end] {
            let w = f64::from(self.counts[r as usize]);
            let dv = self.y[r as usize] - mean;
            parent_s += w * dv;
            parent_sse += w * dv * dv;
        }
        parent_sse -= parent_s * parent_s / weight;
        let mut best: Option<BestSplit> = None;
        for &f in &features {
            let list = &self.lists[f][start..end];
            let (mut wl, mut sl, mut ssl) = (0.0, 0.0, 0.0);
            for i in 0..list.len() - 1 {
                let r = list[i] as usize;
                let w = f64::from(self.counts[r]);
                let dv = self.y[r] - mean;
                wl += w;
                sl += w * dv;
                ssl += w * dv * dv;
                let wr = weight - wl;
                if wl < min_leaf {
                    continue;
                }
                if wr < min_leaf {
                    break;
                }
                let (a, b) = (self.x.get(r, f), self.x.get(list[i + 1] as usize, f));
                if a >= b {
                    continue;
                }
                let sr = parent_s - sl;
                let ssr = (parent_sse + parent_s * parent_s / weight) - ssl;
                let sse = (ssl - sl * sl / wl).max(0.0) + (ssr - sr * sr / wr).max(0.0);
                if best.as_ref().is_none_or(|bs| sse < bs.sse) {
                    let mid = a + (b - a) / 2.0;
                    best = Some(BestSplit {
                        feature: f,
                        threshold: if mid < b { mid } else { a },
                        left_len: i + 1,
                        sse,
                    });
                }
            }
        }
        let Some(split) = best else {
            self.nodes[id] = leaf;
            return id;
        };
        self.gain[split.feature] += (parent_sse - split.sse).max(0.0);

        let mid = start + split.left_len;
        for (i, &r) in self.lists[split.feature][start..end].iter().enumerate() {
            self.goes_left[r as usize] = i < split.left_len;
        }
        for f in 0..self.lists.len() {
            if f == split.feature {
                continue;
            }
            self.scratch.clear();
            let range = &mut self.lists[f][start..end];
            let mut write = 0;
            for i in 0..range.len() {
                let r = range[i];
                if self.goes_left[r as usize] {
                    range[write] = r;
                    write += 1;
                } else {
                    self.scratch.push(r);
                }
            }
            range[write..].copy_from_slice(&self.scratch);
        }

        let left = self.grow(start, mid);
        let right = self.grow(mid, end);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_single(x: &Matrix, y: &[f64], min_leaf: usize) -> (RegressionTree, Vec<f64>) {
        let counts = vec![1; x.nrows()];
        let params = GrowParams {
            min_samples_leaf: min_leaf,
            max_features: x.ncols(),
            seed: 7,
        };
        grow_tree(x, y, &counts, &presort(x), params).unwrap()
    }

    /// Exhaustive best single split by brute force over every threshold.
    fn brute_best_sse(xs: &[f64], ys: &[f64], min_leaf: usize) -> Option<f64> {
        let mut best: Option<f64> = None;
        for &t in xs {
            let (l, r): (Vec<_>, Vec<_>) = xs.iter().zip(ys).partition(|(x, _)| **x <= t);
            if l.len() < min_leaf || r.len() < min_leaf {
                continue;
            }
            let sse = |s: &[(&f64, &f64)]| {
                let m = s.iter().map(|p| *p.1).sum::<f64>() / s.len() as f64;
                s.iter().map(|p| (p.1 - m).powi(2)).sum::<f64>()
            };
            let v = sse(&l) + sse(&r);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        best
    }

    #[test]
    fn isolates_each_point() {
        let x = Matrix::column_vector(&[0.0, 1.0, 2.0]);
        let (tree, _) = fit_single(&x, &[0.0, 1.0, 2.0], 1);
        for v in [0.0, 1.0, 2.0] {
            assert_eq!(tree.predict_row(&[v]), v);
        }
        assert_eq!(tree.n_leaves(), 3);
    }

    #[test]
    fn root_split_matches_enumeration() {
        let xs = [3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0, 5.5, 3.5];
        let ys = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0, 8.0];
        let x = Matrix::column_vector(&xs);
        let (tree, _) = fit_single(&x, &ys, 2);
        let TreeNode::Split { threshold, .. } = tree.nodes()[0] else {
            panic!("root should split")
        };
        let sse = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|y| (y - m).powi(2)).sum::<f64>()
        };
        let (l, r): (Vec<_>, Vec<_>) = xs.iter().copied().zip(ys).partition(|(x, _)| *x <= threshold);
        let left: Vec<f64> = l.iter().map(|p| p.1).collect();
        let right: Vec<f64> = r.iter().map(|p| p.1).collect();
        let best = brute_best_sse(&xs, &ys, 2).unwrap();
        assert!((sse(&left) + sse(&right) - best).abs() < 1e-9);
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 1.0], [2.0, 2.0], [0.0, 5.0]]).unwrap();
        let (tree, gain) = fit_single(&x, &[4.0; 4], 1);
        assert_eq!(tree.nodes(), &[TreeNode::Leaf { value: 4.0 }]);
        assert_eq!(gain, vec![0.0, 0.0]);
    }

    #[test]
    fn duplicate_feature_values_never_split_apart() {
        let x = Matrix::column_vector(&[1.0, 1.0, 1.0, 2.0]);
        let (tree, _) = fit_single(&x, &[0.0, 5.0, 10.0, 3.0], 1);
        assert_eq!(tree.n_leaves(), 2);
        assert_eq!(tree.predict_row(&[1.0]), 5.0);
    }

    #[test]
    fn nested_document_round_trip() {
        let x = Matrix::column_vector(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let (tree, _) = fit_single(&x, &[0.1, 0.7, 0.2, 0.9, 0.3], 1);
        let json = serde_json::to_string(&tree).unwrap();
        assert!(json.contains("\"threshold\"") && json.contains("\"value\""));
        let back: RegressionTree = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tree);
    }
}
