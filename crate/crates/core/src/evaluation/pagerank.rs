//! Weighted PageRank over a commentator graph (commenter → author).
//!
//! This is textbook weighted PageRank with uniform teleport, used as a
//! network-based comparator for the regression scores.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::metrics::spearman;
use crate::error::{Error, Result};

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementEdge {
    /// Commenter.
    pub source: String,
    /// Author.
    pub target: String,
    pub weight: u64,
}

impl EngagementEdge {
    pub fn new(source: &str, target: &str, weight: u64) -> Self {
        EngagementEdge {
            source: source.into(),
            target: target.into(),
            weight,
        }
    }
}

/// Power iteration on the column-stochastic weighted transition matrix.
/// Dangling nodes spread their mass uniformly. Parallel edges add up;
/// self-loops and zero-weight edges are dropped. Stops when the L1 change
/// falls below `tol` or after `max_iter` sweeps.
pub fn pagerank(
    edges: &[EngagementEdge],
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BTreeMap<String, f64>> {
    if !(0.0..=1.0).contains(&damping) {
        return Err(Error::InvalidConfig(format!("damping must be in [0, 1], got {damping}")));
    }
    let kept: Vec<&EngagementEdge> = edges
        .iter()
        .filter(|e| e.source != e.target && e.weight > 0)
        .collect();
    if kept.is_empty() {
        return Err(Error::NoEdges);
    }
    let mut names: Vec<&str> = kept
        .iter()
        .flat_map(|e| [e.source.as_str(), e.target.as_str()])
        .collect();
    names.sort_unstable();
    names.dedup();
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let n = names.len();

    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in &kept {
        *merged
            .entry((index[e.source.as_str()], index[e.target.as_str()]))
            .or_default() += e.weight as f64;
    }
    let mut out_weight = vec![0.0; n];
    for (&(s, _), &w) in &merged {
        out_weight[s] += w;
    }
    let links: Vec<(usize, usize, f64)> = merged
        .into_iter()
        .map(|((s, t), w)| (s, t, w / out_weight[s]))
        .collect();

    let uniform = 1.0 / n as f64;
    let mut rank = vec![uniform; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        let dangling: f64 = rank
            .iter()
            .zip(&out_weight)
            .filter(|(_, &w)| w == 0.0)
            .map(|(r, _)| r)
            .sum();
        let base = (1.0 - damping) * uniform + damping * dangling * uniform;
        next.iter_mut().for_each(|v| *v = base);
        for &(s, t, p) in &links {
            next[t] += damping * p * rank[s];
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < tol {
            break;
        }
    }
    Ok(names
        .into_iter()
        .map(String::from)
        .zip(rank)
        .collect())
}

/// Spearman correlation between scores and influence over the users
/// present in both maps.
pub fn pagerank_rank_correlation(
    scores: &BTreeMap<String, f64>,
    influences: &BTreeMap<String, f64>,
) -> Result<f64> {
    let (a, b): (Vec<f64>, Vec<f64>) = scores
        .iter()
        .filter_map(|(user, &s)| influences.get(user).map(|&inf| (s, inf)))
        .unzip();
    if a.len() < 2 {
        return Err(Error::DegenerateRanking);
    }
    spearman(&a, &b)
}

pub fn read_edges_csv<R: Read>(reader: R) -> Result<Vec<EngagementEdge>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).ne(["source", "target", "weight"]) {
        return Err(Error::MalformedLine {
            line: 1,
            reason: "expected header source,target,weight".into(),
        });
    }
    let mut edges = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let weight: u64 = field(2).parse().map_err(|_| Error::MalformedLine {
            line,
            reason: format!("weight must be a positive integer, got {:?}", field(2)),
        })?;
        if weight == 0 || field(0).is_empty() || field(1).is_empty() {
            return Err(Error::MalformedLine {
                line,
                reason: "edges need a source, a target and weight >= 1".into(),
            });
        }
        edges.push(EngagementEdge::new(field(0), field(1), weight));
    }
    Ok(edges)
}

pub fn write_edges_csv<W: Write>(writer: W, edges: &[EngagementEdge]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for e in edges {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `user_id,<value>` table (e.g. `user_id,influence`) keyed by user.
pub fn read_user_values_csv<R: Read>(reader: R, column: &str) -> Result<BTreeMap<String, f64>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MalformedLine {
                line: 1,
                reason: format!("missing column {name}"),
            })
    };
    let (user_col, value_col) = (find("user_id")?, find(column)?);
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let raw = record.get(value_col).unwrap_or("").trim();
        let value: f64 = raw.parse().map_err(|_| Error::MalformedLine {
            line,
            reason: format!("{column} is not a number: {raw:?}"),
        })?;
        out.insert(record.get(user_col).unwrap_or("").trim().to_string(), value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::seq::SliceRandom;

    fn run(edges: &[EngagementEdge]) -> BTreeMap<String, f64> {
        pagerank(edges, DEFAULT_DAMPING, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()
    }

    /// Dense power iteration written directly from the Google-matrix form.
    fn dense_oracle(n: usize, links: &[(usize, usize, f64)], damping: f64) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(s, _, w) in links {
            out[s] += w;
        }
        let mut g = vec![vec![0.0; n]; n];
        for (t, row) in g.iter_mut().enumerate() {
            for (s, cell) in row.iter_mut().enumerate() {
                let p = if out[s] == 0.0 {
                    1.0 / n as f64
                } else {
                    links
                        .iter()
                        .filter(|l| l.0 == s && l.1 == t)
                        .map(|l| l.2)
                        .sum::<f64>()
                        / out[s]
                };
                *cell = damping * p + (1.0 - damping) / n as f64;
            }
        }
        let mut r = vec![1.0 / n as f64; n];
        for _ in 0..10_000 {
            r = g.iter().map(|row| row.iter().zip(&r).map(|(a, b)| a * b).sum()).collect();
        }
        r
    }

    #[test]
    fn cycle_is_uniform() {
        let s = run(&[
            EngagementEdge::new("A", "B", 1),
            EngagementEdge::new("B", "C", 1),
            EngagementEdge::new("C", "A", 1),
        ]);
        for v in s.values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        let s = run(&[EngagementEdge::new("A", "B", 3), EngagementEdge::new("B", "A", 3)]);
        assert!((s["A"] - 0.5).abs() < 1e-12 && (s["B"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn star_with_dangling_leaves_matches_dense_oracle() {
        let s = run(&[EngagementEdge::new("A", "B", 1), EngagementEdge::new("A", "C", 1)]);
        let oracle = dense_oracle(3, &[(0, 1, 1.0), (0, 2, 1.0)], DEFAULT_DAMPING);
        for (name, expected) in ["A", "B", "C"].iter().zip(&oracle) {
            assert!((s[*name] - expected).abs() < 1e-9, "{name}");
        }
        assert!((s["B"] - s["C"]).abs() < 1e-15);
        assert!(s["B"] > s["A"]);
    }

    #[test]
    fn weighted_graph_matches_dense_oracle() {
        let edges = [
            EngagementEdge::new("a", "b", 3),
            EngagementEdge::new("a", "c", 1),
            EngagementEdge::new("b", "c", 2),
            EngagementEdge::new("c", "a", 1),
            EngagementEdge::new("d", "c", 5),
            EngagementEdge::new("d", "d", 9),
            EngagementEdge::new("b", "c", 1),
        ];
        let s = run(&edges);
        let oracle = dense_oracle(
            4,
            &[(0, 1, 3.0), (0, 2, 1.0), (1, 2, 3.0), (2, 0, 1.0), (3, 2, 5.0)],
            DEFAULT_DAMPING,
        );
        for (name, expected) in ["a", "b", "c", "d"].iter().zip(&oracle) {
            assert!((s[*name] - expected).abs() < 1e-9);
        }
        assert!((s.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn self_loops_only_is_an_error() {
        assert!(matches!(
            pagerank(&[EngagementEdge::new("a", "a", 2)], 0.85, 1e-10, 200),
            Err(Error::NoEdges)
        ));
    }

    #[test]
    fn rank_correlation_over_common_users() {
        let scores: BTreeMap<String, f64> =
            [("a", 0.1), ("b", 0.2), ("c", 0.3), ("z", 0.4)].map(|(k, v)| (k.to_string(), v)).into();
        let inf: BTreeMap<String, f64> =
            [("a", 10.0), ("b", 20.0), ("c", 30.0), ("q", 1.0)].map(|(k, v)| (k.to_string(), v)).into();
        assert!((pagerank_rank_correlation(&scores, &inf).unwrap() - 1.0).abs() < 1e-12);

        let mut r = rng::seeded(99);
        let influence: BTreeMap<String, f64> = (0..1000).map(|i| (format!("u{i}"), i as f64)).collect();
        let mut shuffled: Vec<f64> = (0..1000).map(f64::from).collect();
        shuffled.shuffle(&mut r);
        let scores: BTreeMap<String, f64> =
            (0..1000).map(|i| (format!("u{i}"), shuffled[i])).collect();
        assert!(pagerank_rank_correlation(&scores, &influence).unwrap().abs() < 0.2);
    }

    #[test]
    fn edges_csv_round_trip() {
        let edges = vec![EngagementEdge::new("a", "b", 2), EngagementEdge::new("c", "a", 1)];
        let mut buf = Vec::new();
        write_edges_csv(&mut buf, &edges).unwrap();
        assert!(buf.starts_with(b"source,target,weight\n"));
        assert_eq!(read_edges_csv(buf.as_slice()).unwrap(), edges);
        assert!(read_edges_csv("source,target,weight\na,b,0\n".as_bytes()).is_err());
    }
}
