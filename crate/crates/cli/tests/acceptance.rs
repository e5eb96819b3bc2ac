//! Acceptance checks, one line of output per criterion.
//!
//! Run with `cargo test -p influence-cli --test acceptance`. Criterion 10
//! runs only when `INFLUENCE_REAL_DATA` names a directory holding
//! `posts.jsonl` and `users.csv`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use influence_core::dataset::{
    build_dataset, parse_followers, parse_posts, remove_outlier_posts, Dataset, PostFormat,
    PostRecord, Provenance, UserAggregate, DEFAULT_MIN_POSTS, DEFAULT_Z_THRESHOLD,
};
use influence_core::evaluation::cv::{fit_fold, kfold_split};
use influence_core::evaluation::report::{run_benchmark, EvalReport, ROW_LABELS};
use influence_core::evaluation::{pagerank, pagerank_rank_correlation, r_squared, spearman, EngagementEdge};
use influence_core::features::FeatureTable;
use influence_core::linalg::Matrix;
use influence_core::models::{fit_forest, fit_linear, ForestConfig, ModelSpec};
use influence_core::pipeline::{FeatureSelection, PipelineConfig};
use influence_core::segmentation::fit_kmeans_1d;
use influence_core::synth::{commentator_graph, generate, SynthConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn ridge_oracle(x: &[Vec<f64>], y: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let (n, d) = (x.len(), x[0].len());
    let xm = DMatrix::from_fn(n, d, |i, j| x[i][j]);
    let means = DVector::from_fn(d, |j, _| xm.column(j).mean());
    let ybar = y.iter().sum::<f64>() / n as f64;
    let xc = DMatrix::from_fn(n, d, |i, j| xm[(i, j)] - means[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - ybar);
    let gram = xc.transpose() * &xc + DMatrix::identity(d, d) * alpha;
    let inv = gram.try_inverse().expect("oracle system is singular");
    let w = inv * xc.transpose() * yc;
    let intercept = ybar - w.dot(&means);
    (w.iter().copied().collect(), intercept)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = rng.random_range(1..=3);
        let n = rng.random_range(d + 2..=50);
        let alpha = [0.0, 0.5, 1.0, 10.0][rng.random_range(0..4)];
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().sum::<f64>() * 0.7 + rng.random_range(-3.0..3.0))
            .collect();
        let x = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let model = fit_linear(&x, &y, alpha, true).map_err(|e| e.to_string())?;
        let (w, b) = ridge_oracle(&rows, &y, alpha);
        for (a, o) in model.weights.iter().zip(&w) {
            worst = worst.max((a - o).abs());
        }
        worst = worst.max((model.intercept - b).abs());
    }
    let t = start.elapsed();
    check(
        worst <= 1e-8 && within(t, 5.0),
        format!("200 instances, max coefficient error {worst:.2e}, {:.2}s", t.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..100u64 {
        let d = rng.random_range(1..=4);
        let n = rng.random_range(15..=80);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0] * r[0] - r[d - 1] + rng.random_range(-1.0..1.0))
            .collect();
        let x = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let probe_rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..d).map(|_| rng.random_range(-50.0..50.0)).collect())
            .collect();
        let probe = Matrix::from_rows(&probe_rows).map_err(|e| e.to_string())?;
        let config = ForestConfig {
            n_trees: 25,
            min_samples_leaf: rng.random_range(1..=5),
            seed: case,
            ..ForestConfig::default()
        };
        let a = fit_forest(&x, &y, &config).and_then(|m| m.predict(&probe)).map_err(|e| e.to_string())?;
        let b = fit_forest(&x, &y, &config).and_then(|m| m.predict(&probe)).map_err(|e| e.to_string())?;
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if let Some(p) = a.iter().find(|p| **p < lo || **p > hi) {
            return Err(format!("case {case}: prediction {p} outside [{lo}, {hi}]"));
        }
        if a.iter().zip(&b).any(|(p, q)| p.to_bits() != q.to_bits()) {
            return Err(format!("case {case}: reruns differ"));
        }
    }
    let t = start.elapsed();
    check(
        within(t, 30.0),
        format!("100 instances in range and bit-identical, {:.2}s", t.as_secs_f64()),
    )
}

/// Exhaustive search over contiguous partitions of the sorted values.
fn contiguous_optimum(values: &[f64], k: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let sse = |seg: &[f64]| {
        let m = seg.iter().sum::<f64>() / seg.len() as f64;
        seg.iter().map(|x| (x - m).powi(2)).sum::<f64>()
    };
    let mut best = f64::INFINITY;
    match k {
        1 => best = sse(&v),
        2 => {
            for a in 1..n {
                best = best.min(sse(&v[..a]) + sse(&v[a..]));
            }
        }
        3 => {
            for a in 1..n {
                for b in a + 1..n {
                    best = best.min(sse(&v[..a]) + sse(&v[a..b]) + sse(&v[b..]));
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for case in 0..200u64 {
        let n = rng.random_range(3..=12);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let k = rng.random_range(1..=3);
        let km = fit_kmeans_1d(&values, k, 10, case).map_err(|e| e.to_string())?;
        let gap = (km.inertia - contiguous_optimum(&values, k)).abs();
        if gap > 1e-9 {
            return Err(format!("case {case}: inertia {} vs optimum (gap {gap:.3e})", km.inertia));
        }
        worst = worst.max(gap);
    }
    let t = start.elapsed();
    check(
        within(t, 5.0),
        format!("200 instances, max gap {worst:.2e}, {:.2}s", t.as_secs_f64()),
    )
}

fn criterion_4() -> Outcome {
    let tied = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).map_err(|e| e.to_string())?;
    let expected = 4.5 / 22.5f64.sqrt();
    if (tied - expected).abs() > 1e-9 {
        return Err(format!("tied example gave {tied}, expected {expected}"));
    }
    let r2 = r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).map_err(|e| e.to_string())?;
    if (r2 - 0.5).abs() > 1e-9 {
        return Err(format!("r_squared example gave {r2}"));
    }
    let a: Vec<f64> = (0..10).map(f64::from).collect();
    let rev: Vec<f64> = a.iter().rev().copied().collect();
    let same = spearman(&a, &a).map_err(|e| e.to_string())?;
    let inv = spearman(&a, &rev).map_err(|e| e.to_string())?;
    if (same - 1.0).abs() > 1e-9 || (inv + 1.0).abs() > 1e-9 {
        return Err(format!("identity/reversal gave {same}/{inv}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..500 {
        let n = rng.random_range(3..60);
        // Coarse grid values produce ties.
        let x: Vec<f64> = (0..n).map(|_| (rng.random_range(-40..40) as f64) / 8.0).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let base = match spearman(&x, &y) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let cubed: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let exped: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        for (label, got) in [
            ("x^3", spearman(&cubed, &y)),
            ("exp", spearman(&x, &exped)),
            ("both", spearman(&cubed, &exped)),
        ] {
            let got = got.map_err(|e| e.to_string())?;
            if (got - base).abs() > 1e-9 {
                return Err(format!("case {case}: {label} changed r_s from {base} to {got}"));
            }
        }
    }
    Ok("worked examples exact to 1e-9, 500 monotone-transform cases invariant".into())
}

fn user_with_views(views: &[u64]) -> UserAggregate {
    let posts: Vec<PostRecord> = views
        .iter()
        .enumerate()
        .map(|(i, &v)| PostRecord::new("u", &format!("p{i}"), 0, 0, v))
        .collect();
    UserAggregate {
        user_id: "u".into(),
        followers: 1000,
        post_count_total: posts.len(),
        influence: 0.0,
        posts,
    }
}

fn criterion_5() -> Outcome {
    let mut views = vec![10u64; 9];
    views.push(500);
    let mean = views.iter().sum::<u64>() as f64 / 10.0;
    let std = (views.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
    let z = (500.0 - mean) / std;
    let spiky = remove_outlier_posts(&user_with_views(&views), 2.0).map_err(|e| e.to_string())?;
    let kept: Vec<u64> = spiky.posts.iter().map(|p| p.views).collect();
    if kept != vec![10; 9] || spiky.influence != 10.0 {
        return Err(format!("spiky user kept {kept:?}, influence {}", spiky.influence));
    }
    let loose = remove_outlier_posts(&user_with_views(&views), 3.0).map_err(|e| e.to_string())?;
    if loose.posts.len() != 10 {
        return Err(format!("threshold 3.0 removed {} posts", 10 - loose.posts.len()));
    }
    let flat = remove_outlier_posts(&user_with_views(&[10; 10]), 2.0).map_err(|e| e.to_string())?;
    check(
        flat.posts.len() == 10 && flat.influence == 10.0,
        format!("z(500) = {z:.3}: only the 500-view post removed; constant user keeps all 10"),
    )
}

fn ingest_synthetic(out: &influence_core::synth::SynthOutput) -> Result<Dataset, String> {
    let posts: Vec<PostRecord> = out.dataset.all_posts().cloned().collect();
    let followers: HashMap<String, u64> = out
        .dataset
        .users
        .iter()
        .map(|u| (u.user_id.clone(), u.followers))
        .collect();
    build_dataset(&posts, &followers, DEFAULT_MIN_POSTS, DEFAULT_Z_THRESHOLD, Provenance::Synthetic, Some(out.dataset.seed.unwrap_or(0)))
        .map_err(|e| e.to_string())
}

fn criterion_6(report: &Result<(EvalReport, Duration), String>) -> Outcome {
    let (report, t) = report.as_ref().map_err(Clone::clone)?;
    let rows: Vec<_> = ROW_LABELS.iter().map(|l| report.row(l).expect("row present")).collect();
    let (full_ridge, full_forest, min_ridge, min_forest, followers) = (rows[0], rows[1], rows[2], rows[3], rows[4]);
    let mut failures = Vec::new();
    for (col, r2_of, rs_of) in [
        ("regression", (|r: &influence_core::evaluation::ReportRow| r.r2_regression) as fn(&_) -> f64, (|r: &influence_core::evaluation::ReportRow| r.rs_regression) as fn(&_) -> f64),
        ("multi", |r| r.r2_multi, |r| r.rs_multi),
    ] {
        for other in rows.iter().filter(|r| r.model_name != followers.model_name) {
            if !(r2_of(followers) < r2_of(other) && rs_of(followers) < rs_of(other)) {
                failures.push(format!("{col}: followers baseline not strictly below {}", other.model_name));
            }
        }
        let gap = r2_of(full_ridge) - r2_of(followers);
        if gap < 0.2 {
            failures.push(format!("{col}: ridge/followers R² gap {gap:.3}"));
        }
        for (full, minimal) in [(full_ridge, min_ridge), (full_forest, min_forest)] {
            let diff = (r2_of(full) - r2_of(minimal)).abs();
            if diff > 0.05 {
                failures.push(format!("{col}: {} vs {} differ by {diff:.3}", minimal.model_name, full.model_name));
            }
        }
        if let Some(r) = rows.iter().find(|r| rs_of(r) <= 0.5) {
            failures.push(format!("{col}: {} r_s {:.3}", r.model_name, rs_of(r)));
        }
    }
    if !within(*t, 120.0) {
        failures.push(format!("took {:.1}s", t.as_secs_f64()));
    }
    if failures.is_empty() {
        Ok(format!(
            "ridge R² {:.3} vs followers {:.3}; minimal within {:.3}; min r_s {:.3}; {:.1}s",
            full_ridge.r2_regression,
            followers.r2_regression,
            (full_ridge.r2_regression - min_ridge.r2_regression)
                .abs()
                .max((full_forest.r2_regression - min_forest.r2_regression).abs()),
            rows.iter()
                .flat_map(|r| [r.rs_regression, r.rs_multi])
                .fold(f64::INFINITY, f64::min),
            t.as_secs_f64()
        ))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_7(synth: &influence_core::synth::SynthOutput, report: &Result<(EvalReport, Duration), String>) -> Outcome {
    let cycle = pagerank(
        &[
            EngagementEdge::new("a", "b", 1),
            EngagementEdge::new("b", "c", 1),
            EngagementEdge::new("c", "a", 1),
        ],
        0.85,
        1e-12,
        1000,
    )
    .map_err(|e| e.to_string())?;
    if cycle.values().any(|v| (v - 1.0 / 3.0).abs() > 1e-12) {
        return Err(format!("3-cycle scores {cycle:?}"));
    }
    let pair = pagerank(&[EngagementEdge::new("a", "b", 2), EngagementEdge::new("b", "a", 2)], 0.85, 1e-12, 1000)
        .map_err(|e| e.to_string())?;
    if pair.values().any(|v| (v - 0.5).abs() > 1e-12) {
        return Err(format!("two-cycle scores {pair:?}"));
    }
    let edges = commentator_graph(&synth.dataset, 42);
    let scores = pagerank(&edges, 0.85, 1e-10, 200).map_err(|e| e.to_string())?;
    let total: f64 = scores.values().sum();
    if (total - 1.0).abs() > 1e-9 || scores.values().any(|v| *v < 0.0) {
        return Err(format!("scores sum to {total}"));
    }
    let rs = pagerank_rank_correlation(&scores, &synth.ground_truth_map()).map_err(|e| e.to_string())?;
    let (report, _) = report.as_ref().map_err(Clone::clone)?;
    let ridge_rs = report.row(ROW_LABELS[0]).expect("ridge row").rs_regression;
    check(
        rs < ridge_rs,
        format!("sum {total:.12}; cycles exact; PageRank r_s {rs:.3} vs full ridge {ridge_rs:.3}"),
    )
}

fn criterion_8() -> Outcome {
    let out = generate(&SynthConfig {
        n_users: 1500,
        seed: 8,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let ds = ingest_synthetic(&out)?;
    let table = FeatureTable::from_dataset(&ds, false).map_err(|e| e.to_string())?;
    let folds = kfold_split(table.len(), 5, 8).map_err(|e| e.to_string())?;
    let forest = ModelSpec::Forest(ForestConfig {
        n_trees: 15,
        seed: 8,
        ..ForestConfig::default()
    });
    let configs = vec![
        PipelineConfig::new(ModelSpec::ridge(), 8),
        PipelineConfig {
            selection: FeatureSelection::Rfe { target: 4 },
            ..PipelineConfig::new(forest.clone(), 8)
        },
        PipelineConfig {
            multi_k: Some(2),
            ..PipelineConfig::new(ModelSpec::ridge(), 8)
        },
        PipelineConfig {
            multi_k: Some(2),
            log_target: true,
            ..PipelineConfig::new(forest, 8)
        },
    ];
    let mut fits = 0;
    for config in &configs {
        for fold in 0..folds.k {
            let clean = fit_fold(&table.features, &table.influence, &folds, fold, config).map_err(|e| e.to_string())?;
            let mut poisoned = table.influence.clone();
            for i in folds.test_indices(fold) {
                poisoned[i] = poisoned[i] * 7.0 + 12345.0;
            }
            let dirty = fit_fold(&table.features, &poisoned, &folds, fold, config).map_err(|e| e.to_string())?;
            let a = serde_json::to_string(&clean).map_err(|e| e.to_string())?;
            let b = serde_json::to_string(&dirty).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("fold {fold} of {config:?} changed after perturbing test targets"));
            }
            fits += 1;
        }
    }
    Ok(format!("{fits} fold fits bit-identical with perturbed test targets"))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_influence"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr).trim()))
    }
}

fn collect_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else if let Ok(bytes) = fs::read(&p) {
                out.insert(p.strip_prefix(dir).unwrap_or(&p).to_path_buf(), bytes);
            }
        }
    }
    out
}

fn criterion_9() -> Outcome {
    let pipeline: [&[&str]; 8] = [
        &["synth", "--seed", "42"],
        &["ingest", "--seed", "42"],
        &["features", "--seed", "42"],
        &["train", "--seed", "42"],
        &["rank", "--seed", "42"],
        &["train", "--seed", "42", "--model", "forest", "--rfe", "4", "--n-trees", "30", "--out", "data/forest.json"],
        &["pagerank", "--seed", "42"],
        &["eval", "--seed", "42"],
    ];
    let mut runs = Vec::new();
    for threads in ["1", "0"] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        for step in pipeline {
            let mut args = vec!["--threads", threads];
            args.extend_from_slice(step);
            run_cli(dir.path(), &args)?;
        }
        runs.push(collect_files(dir.path()));
    }
    let (a, b) = (&runs[0], &runs[1]);
    if a.keys().ne(b.keys()) {
        return Err(format!("file sets differ: {:?} vs {:?}", a.keys(), b.keys()));
    }
    if let Some(path) = a.keys().find(|k| a[*k] != b[*k]) {
        return Err(format!("{} differs between runs", path.display()));
    }
    check(
        a.len() >= 20,
        format!("{} artifacts byte-identical across two runs", a.len()),
    )
}

/// Table 1 cells: (label, R² plain, r_s plain, R² multi, r_s multi).
const REFERENCE_TABLE: [(&str, f64, f64, f64, f64); 6] = [
    ("full Ridge Regression", 0.725, 0.848, 0.727, 0.821),
    ("full Random Forest", 0.626, 0.869, 0.621, 0.861),
    ("minimal Ridge Regression", 0.723, 0.818, 0.727, 0.818),
    ("minimal Random Forest", 0.616, 0.864, 0.611, 0.859),
    ("Followers Baseline", 0.211, 0.757, 0.204, 0.725),
    ("Likes Baseline", 0.666, 0.859, 0.654, 0.853),
];

fn criterion_10() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("INFLUENCE_REAL_DATA")?);
    Some((|| {
        let posts = parse_posts(fs::File::open(dir.join("posts.jsonl")).map_err(|e| e.to_string())?, PostFormat::Jsonl)
            .map_err(|e| e.to_string())?;
        let followers = parse_followers(fs::File::open(dir.join("users.csv")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let ds = build_dataset(&posts, &followers, DEFAULT_MIN_POSTS, DEFAULT_Z_THRESHOLD, Provenance::Ingested, Some(42))
            .map_err(|e| e.to_string())?;
        let report = run_benchmark(&ds, 42).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for (label, a, b, c, d) in REFERENCE_TABLE {
            let r = report.row(label).ok_or(format!("missing row {label}"))?;
            for (got, want) in [(r.r2_regression, a), (r.rs_regression, b), (r.r2_multi, c), (r.rs_multi, d)] {
                worst = worst.max((got - want).abs());
            }
        }
        let order = |key: &dyn Fn(usize) -> f64| {
            let mut idx: Vec<usize> = (0..6).collect();
            idx.sort_by(|&i, &j| key(j).total_cmp(&key(i)));
            idx
        };
        let got_order = order(&|i| report.row(REFERENCE_TABLE[i].0).map_or(f64::NAN, |r| r.rs_regression));
        let want_order = order(&|i| REFERENCE_TABLE[i].2);
        check(
            worst <= 0.08 && got_order == want_order,
            format!("max cell deviation {worst:.3}, r_s order {got_order:?} vs {want_order:?}"),
        )
    })())
}

fn main() -> ExitCode {
    let synth = generate(&SynthConfig::default()).expect("default synthetic corpus");
    let report = ingest_synthetic(&synth).and_then(|ds| {
        let start = Instant::now();
        run_benchmark(&ds, 42)
            .map(|r| (r, start.elapsed()))
            .map_err(|e| e.to_string())
    });

    let results: Vec<(u32, &str, Option<Outcome>)> = vec![
        (1, "ridge oracle equivalence", Some(criterion_1())),
        (2, "forest range and determinism", Some(criterion_2())),
        (3, "1-D k-means optimality", Some(criterion_3())),
        (4, "metric correctness", Some(criterion_4())),
        (5, "outlier rule", Some(criterion_5())),
        (6, "qualitative benchmark ordering", Some(criterion_6(&report))),
        (7, "PageRank comparator", Some(criterion_7(&synth, &report))),
        (8, "leakage canary", Some(criterion_8())),
        (9, "end-to-end determinism", Some(criterion_9())),
        (10, "real-data benchmark (optional)", criterion_10()),
    ];
    if let Ok((r, _)) = &report {
        print!("{}", r.to_text_table());
    }
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Some(Ok(detail)) => println!("criterion {n:>2} {name}: PASS ({detail})"),
            Some(Err(detail)) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({detail})");
            }
            None => println!("criterion {n:>2} {name}: SKIP (set INFLUENCE_REAL_DATA to a directory with posts.jsonl and users.csv)"),
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
