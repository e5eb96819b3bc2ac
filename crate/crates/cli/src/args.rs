use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "influence", version, about = "Influence scoring pipelines for pull-based social networks")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Plain-text `key=value` file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel model fitting (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic posting corpus with known influence.
    Synth(SynthArgs),
    /// Group posts per user, filter, drop outlier posts, compute influence.
    Ingest(IngestArgs),
    /// Extract the raw eight-column feature table.
    Features(FeaturesArgs),
    /// Fit one model configuration on a feature table.
    Train(TrainArgs),
    /// Cross-validated benchmark of all model configurations.
    Eval(EvalArgs),
    /// Score and rank users with a trained model.
    Rank(RankArgs),
    /// Weighted PageRank over an engagement graph.
    Pagerank(PagerankArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "data")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub n_users: usize,
    #[arg(long, default_value_t = 10)]
    pub min_posts: usize,
    #[arg(long, default_value_t = 40)]
    pub max_posts: usize,
    #[arg(long)]
    pub sponsored_frac: Option<f64>,
    #[arg(long)]
    pub bought_frac: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long, default_value = "data/posts.jsonl")]
    pub posts: PathBuf,
    #[arg(long, default_value = "data/users.csv")]
    pub users: PathBuf,
    /// Posts file format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long, default_value = "data")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub min_posts: usize,
    #[arg(long, default_value_t = 2.0)]
    pub z_threshold: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct DatasetArgs {
    #[arg(long, default_value = "data/aggregates.csv")]
    pub aggregates: PathBuf,
    #[arg(long, default_value = "data/retained_posts.jsonl")]
    pub retained_posts: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value = "data/features.csv")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ridge,
    Forest,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "ridge")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    #[arg(long, default_value_t = 5)]
    pub min_samples_leaf: usize,
    /// Features tried per split (default: a third of the features, rounded up).
    #[arg(long)]
    pub max_features: Option<usize>,
    #[arg(long)]
    pub no_bootstrap: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, default_value = "data/features.csv")]
    pub features: PathBuf,
    #[arg(long, default_value = "data/model.json")]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Keep this many features by recursive elimination.
    #[arg(long, conflicts_with = "columns")]
    pub rfe: Option<usize>,
    /// Comma-separated feature names to use.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Fit one model per follower segment.
    #[arg(long)]
    pub multi: bool,
    #[arg(long, default_value_t = 3)]
    pub k_clusters: usize,
    /// Use likes_avg and followers as-is instead of x / ln x.
    #[arg(long)]
    pub no_transform: bool,
    #[arg(long)]
    pub log_target: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value = "data")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k_folds: usize,
    #[arg(long, default_value_t = 3)]
    pub k_clusters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    #[arg(long, default_value_t = 5)]
    pub min_samples_leaf: usize,
    /// Free-form label stored in the report metadata.
    #[arg(long)]
    pub timestamp: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    #[arg(long, default_value = "data/model.json")]
    pub model: PathBuf,
    #[arg(long, default_value = "data/features.csv")]
    pub features: PathBuf,
    #[arg(long, default_value = "data/ranking.csv")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct PagerankArgs {
    #[arg(long, default_value = "data/edges.csv")]
    pub edges: PathBuf,
    /// CSV with a `user_id` column and an influence column to correlate against.
    #[arg(long, default_value = "data/ground_truth.csv")]
    pub influence: PathBuf,
    #[arg(long, default_value = "influence")]
    pub influence_column: String,
    #[arg(long, default_value = "data/pagerank.csv")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.85)]
    pub damping: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}
