use std::cmp::Ordering;
use std::path::Path;

use influence_core::dataset::{
    build_dataset, dataset_from_aggregates, parse_followers, parse_posts, read_aggregates_csv,
    write_aggregates_csv, write_followers_csv, write_posts_jsonl, Dataset, PostFormat, Provenance,
};
use influence_core::evaluation::pagerank::{read_edges_csv, read_user_values_csv, write_edges_csv};
use influence_core::evaluation::{pagerank, pagerank_rank_correlation, run_benchmark_with, BenchmarkOptions};
use influence_core::features::{read_feature_csv, write_feature_csv, FeatureTable, FEATURE_NAMES};
use influence_core::meta::ArtifactMeta;
use influence_core::models::{ForestConfig, ModelSpec};
use influence_core::pipeline::{FeatureSelection, PipelineConfig, TrainedPipeline};
use influence_core::synth::{commentator_graph, generate, write_ground_truth_csv, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::error::CliError;
use crate::output::{
    effective_args, open, read_to_string, require_inputs, write_bytes, write_json_with_meta,
    write_with_sidecar,
};

fn meta<T: Serialize>(command: &str, seed: u64, args: &T) -> ArtifactMeta {
    ArtifactMeta::new(command, seed, effective_args(args))
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let defaults = SynthConfig::default();
    let config = SynthConfig {
        n_users: args.n_users,
        posts_per_user: (args.min_posts, args.max_posts),
        anomaly_sponsored_frac: args.sponsored_frac.unwrap_or(defaults.anomaly_sponsored_frac),
        anomaly_bought_frac: args.bought_frac.unwrap_or(defaults.anomaly_bought_frac),
        noise_sigma: args.noise_sigma.unwrap_or(defaults.noise_sigma),
        seed: args.seed,
        ..defaults
    };
    let out = generate(&config)?;
    let m = meta("synth", args.seed, args);
    let dir = &args.out_dir;

    let mut buf = Vec::new();
    write_posts_jsonl(&mut buf, out.dataset.all_posts())?;
    write_with_sidecar(&dir.join("posts.jsonl"), &buf, &m)?;

    buf.clear();
    write_followers_csv(
        &mut buf,
        out.dataset.users.iter().map(|u| (u.user_id.as_str(), u.followers)),
    )?;
    write_with_sidecar(&dir.join("users.csv"), &buf, &m)?;

    buf.clear();
    write_edges_csv(&mut buf, &commentator_graph(&out.dataset, args.seed))?;
    write_with_sidecar(&dir.join("edges.csv"), &buf, &m)?;

    buf.clear();
    write_ground_truth_csv(&mut buf, &out.ground_truth)?;
    write_with_sidecar(&dir.join("ground_truth.csv"), &buf, &m)?;

    println!(
        "synth: {} users, {} posts -> {}",
        out.dataset.len(),
        out.dataset.all_posts().count(),
        dir.display()
    );
    Ok(())
}

fn post_format(args: &IngestArgs) -> PostFormat {
    match args.format {
        Some(InputFormat::Csv) => PostFormat::Csv,
        Some(InputFormat::Jsonl) => PostFormat::Jsonl,
        None => match args.posts.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => PostFormat::Csv,
            _ => PostFormat::Jsonl,
        },
    }
}

pub fn ingest(args: &IngestArgs) -> Result<(), CliError> {
    require_inputs(&[&args.posts, &args.users])?;
    if args.z_threshold.is_nan() || args.z_threshold <= 0.0 {
        return Err(CliError::Usage(format!("--z-threshold must be positive, got {}", args.z_threshold)));
    }
    let posts = parse_posts(open(&args.posts)?, post_format(args))?;
    let followers = parse_followers(open(&args.users)?)?;
    let dataset = build_dataset(
        &posts,
        &followers,
        args.min_posts,
        args.z_threshold,
        Provenance::Ingested,
        Some(args.seed),
    )?;
    let m = meta("ingest", args.seed, args);

    let mut buf = Vec::new();
    write_aggregates_csv(&mut buf, &dataset)?;
    write_with_sidecar(&args.out_dir.join("aggregates.csv"), &buf, &m)?;
    buf.clear();
    write_posts_jsonl(&mut buf, dataset.all_posts())?;
    write_with_sidecar(&args.out_dir.join("retained_posts.jsonl"), &buf, &m)?;

    println!(
        "ingest: {} posts read, {} users kept, {} posts retained",
        posts.len(),
        dataset.len(),
        dataset.all_posts().count()
    );
    Ok(())
}

fn load_dataset(args: &DatasetArgs, seed: u64) -> Result<Dataset, CliError> {
    require_inputs(&[&args.aggregates, &args.retained_posts])?;
    let rows = read_aggregates_csv(open(&args.aggregates)?)?;
    let posts = parse_posts(open(&args.retained_posts)?, PostFormat::Jsonl)?;
    Ok(dataset_from_aggregates(&rows, &posts, Provenance::Ingested, Some(seed))?)
}

pub fn features(args: &FeaturesArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.dataset, args.seed)?;
    let table = FeatureTable::from_dataset(&dataset, false)?;
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, &table)?;
    write_with_sidecar(&args.out, &buf, &meta("features", args.seed, args))?;
    println!("features: {} users -> {}", table.len(), args.out.display());
    Ok(())
}

fn model_spec(m: &ModelArgs, seed: u64) -> ModelSpec {
    match m.model {
        ModelKind::Ridge => ModelSpec::Ridge { alpha: m.alpha },
        ModelKind::Forest => ModelSpec::Forest(ForestConfig {
            n_trees: m.n_trees,
            min_samples_leaf: m.min_samples_leaf,
            max_features_per_split: m.max_features,
            bootstrap: !m.no_bootstrap,
            seed,
        }),
    }
}

fn selection(args: &TrainArgs) -> Result<FeatureSelection, CliError> {
    if let Some(target) = args.rfe {
        return Ok(FeatureSelection::Rfe { target });
    }
    let Some(names) = &args.columns else {
        return Ok(FeatureSelection::All);
    };
    let indices = names
        .iter()
        .map(|n| {
            FEATURE_NAMES
                .iter()
                .position(|f| *f == n.trim())
                .ok_or_else(|| CliError::Usage(format!("unknown feature {n:?}; expected one of {}", FEATURE_NAMES.join(","))))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureSelection::Columns { indices })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    meta: ArtifactMeta,
    pipeline: TrainedPipeline,
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    require_inputs(&[&args.features])?;
    let config = PipelineConfig {
        spec: model_spec(&args.model, args.seed),
        selection: selection(args)?,
        transform_scales: !args.no_transform,
        multi_k: args.multi.then_some(args.k_clusters),
        log_target: args.log_target,
        seed: args.seed,
    };
    let table = read_feature_csv(open(&args.features)?)?;
    let pipeline = TrainedPipeline::fit(&config, &table.features, &table.influence)?;
    write_json_with_meta(&args.out, &meta("train", args.seed, args), "pipeline", &pipeline)?;
    println!(
        "train: {} rows, features [{}] -> {}",
        table.len(),
        pipeline.feature_names.join(","),
        args.out.display()
    );
    Ok(())
}

pub fn rank(args: &RankArgs) -> Result<(), CliError> {
    require_inputs(&[&args.model, &args.features])?;
    let model: ModelFile = serde_json::from_str(&read_to_string(&args.model)?)?;
    let table = read_feature_csv(open(&args.features)?)?;
    let preds = model.pipeline.predict(&table.features)?;
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .partial_cmp(&preds[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| table.user_ids[a].cmp(&table.user_ids[b]))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "user_id", "predicted_influence"])?;
    for (r, &i) in order.iter().enumerate() {
        w.write_record([(r + 1).to_string(), table.user_ids[i].clone(), preds[i].to_string()])?;
    }
    let buf = w.into_inner().map_err(|e| CliError::Io {
        path: args.out.clone(),
        source: e.into_error(),
    })?;
    write_with_sidecar(&args.out, &buf, &meta("rank", args.seed, args))?;
    println!("rank: {} users -> {}", table.len(), args.out.display());
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.dataset, args.seed)?;
    let options = BenchmarkOptions {
        k_folds: args.k_folds,
        k_clusters: args.k_clusters,
        ridge_alpha: args.alpha,
        forest: ForestConfig {
            n_trees: args.n_trees,
            min_samples_leaf: args.min_samples_leaf,
            seed: args.seed,
            ..ForestConfig::default()
        },
        timestamp: args.timestamp.clone(),
        ..BenchmarkOptions::new(args.seed)
    };
    let report = run_benchmark_with(&dataset, &options)?;
    let m = meta("eval", args.seed, args);
    write_json_with_meta(&args.out_dir.join("report.json"), &m, "report", &report)?;
    let table = report.to_text_table();
    write_bytes(&args.out_dir.join("report.txt"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct PagerankSummary {
    scored_users: usize,
    compared_users: usize,
    rank_correlation: f64,
}

pub fn pagerank_cmd(args: &PagerankArgs) -> Result<(), CliError> {
    require_inputs(&[&args.edges, &args.influence])?;
    let edges = read_edges_csv(open(&args.edges)?)?;
    let scores = pagerank(&edges, args.damping, args.tol, args.max_iter)?;
    let influence = read_user_values_csv(open(&args.influence)?, &args.influence_column)?;
    let rs = pagerank_rank_correlation(&scores, &influence)?;
    let m = meta("pagerank", args.seed, args);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["user_id", "score"])?;
    for (user, score) in &scores {
        w.write_record([user.as_str(), &score.to_string()])?;
    }
    let buf = w.into_inner().map_err(|e| CliError::Io {
        path: args.out.clone(),
        source: e.into_error(),
    })?;
    write_with_sidecar(&args.out, &buf, &m)?;
    let summary = PagerankSummary {
        scored_users: scores.len(),
        compared_users: scores.keys().filter(|k| influence.contains_key(*k)).count(),
        rank_correlation: rs,
    };
    write_json_with_meta(&summary_path(&args.out), &m, "summary", &summary)?;
    println!("pagerank: {} users, r_s = {rs:.4}", scores.len());
    Ok(())
}

fn summary_path(out: &Path) -> std::path::PathBuf {
    out.with_extension("json")
}
