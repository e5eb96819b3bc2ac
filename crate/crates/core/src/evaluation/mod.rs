//! Metrics, cross-validation, the benchmark report, and the PageRank comparator.

pub mod cv;
pub mod metrics;
pub mod pagerank;
pub mod report;

pub use cv::{cross_validate, evaluate_config, evaluate_table, fit_fold, kfold_split, CvScores, FoldSplit};
pub use metrics::{average_ranks, r_squared, spearman};
pub use pagerank::{pagerank, pagerank_rank_correlation, EngagementEdge};
pub use report::{run_benchmark, run_benchmark_with, BenchmarkOptions, EvalReport, ReportRow, ROW_LABELS};
