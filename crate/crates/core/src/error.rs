use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("duplicate post ({user_id}, {post_id}) on lines {first_line} and {second_line}")]
    DuplicatePost {
        user_id: String,
        post_id: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("user {user_id} keeps {remaining} posts after outlier removal, need at least 2")]
    DegenerateUser { user_id: String, remaining: usize },

    #[error("influence is undefined for an empty post list")]
    EmptyPosts,

    #[error("log_scale input must be non-negative, got {0}")]
    NegativeInput(f64),

    #[error("need at least {required} rows, got {rows}")]
    TooFewRows { rows: usize, required: usize },

    #[error("normal equations are numerically singular (pivot {pivot:e} in column {column})")]
    SingularSystem { column: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {required} samples, got {n}")]
    TooFewSamples { n: usize, required: usize },

    #[error("model has not been fitted")]
    UnfittedModel,

    #[error("k-means needs at least {k} distinct values, got {distinct}")]
    TooFewDistinctValues { distinct: usize, k: usize },

    #[error("cluster {cluster} received {size} training rows, need at least {required}")]
    ClusterTooSmall {
        cluster: usize,
        size: usize,
        required: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("R² is undefined for a constant target")]
    ConstantTarget,

    #[error("rank correlation needs at least 2 observations with 2 distinct values on each side")]
    DegenerateRanking,

    #[error("cannot split {n} users into {k} folds")]
    TooFewUsers { n: usize, k: usize },

    #[error("fold {fold} has {size} test users, need at least 3")]
    InvalidFold { fold: usize, size: usize },

    #[error("edge list is empty after removing self-loops")]
    NoEdges,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable snake_case identifier, used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedLine { .. } => "malformed_line",
            Error::DuplicatePost { .. } => "duplicate_post",
            Error::DegenerateUser { .. } => "degenerate_user",
            Error::EmptyPosts => "empty_posts",
            Error::NegativeInput(_) => "negative_input",
            Error::TooFewRows { .. } => "too_few_rows",
            Error::SingularSystem { .. } => "singular_system",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::UnfittedModel => "unfitted_model",
            Error::TooFewDistinctValues { .. } => "too_few_distinct_values",
            Error::ClusterTooSmall { .. } => "cluster_too_small",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ConstantTarget => "constant_target",
            Error::DegenerateRanking => "degenerate_ranking",
            Error::TooFewUsers { .. } => "too_few_users",
            Error::InvalidFold { .. } => "invalid_fold",
            Error::NoEdges => "no_edges",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
