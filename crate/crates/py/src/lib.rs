//! Python bindings: datasets, features, model pipelines, k-means, metrics,
//! PageRank and the cross-validated benchmark.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;

use influence_core::dataset::{self, PostFormat, Provenance};
use influence_core::evaluation::{self, BenchmarkOptions, EngagementEdge, EvalReport};
use influence_core::features::{self, FeatureTable, FEATURE_NAMES};
use influence_core::models::{ForestConfig, ModelSpec};
use influence_core::pipeline::{FeatureSelection, PipelineConfig, TrainedPipeline};
use influence_core::segmentation::{self, KMeans1D};
use influence_core::synth::{self, SynthConfig};
use influence_core::Matrix;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError};
use pyo3::prelude::*;

create_exception!(influence, InfluenceError, PyException, "Raised for invalid data or configurations.");

fn err(e: influence_core::Error) -> PyErr {
    InfluenceError::new_err(format!("[{}] {e}", e.kind()))
}

fn open(path: &str) -> PyResult<File> {
    File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(err)
}

#[pyfunction]
fn log_scale(x: f64) -> PyResult<f64> {
    features::log_scale(x).map_err(err)
}

#[pyfunction]
fn r_squared(y_true: Vec<f64>, y_pred: Vec<f64>) -> PyResult<f64> {
    evaluation::r_squared(&y_true, &y_pred).map_err(err)
}

#[pyfunction]
fn spearman(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    evaluation::spearman(&a, &b).map_err(err)
}

/// Fold index of every row.
#[pyfunction]
#[pyo3(signature = (n, k=5, seed=42))]
fn kfold_split(n: usize, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    Ok(evaluation::kfold_split(n, k, seed).map_err(err)?.fold_assignments)
}

/// `edges` is a list of `(source, target, weight)`.
#[pyfunction]
#[pyo3(signature = (edges, damping=0.85, tol=1e-10, max_iter=200))]
fn pagerank(edges: Vec<(String, String, u64)>, damping: f64, tol: f64, max_iter: usize) -> PyResult<BTreeMap<String, f64>> {
    let edges: Vec<EngagementEdge> = edges
        .into_iter()
        .map(|(s, t, w)| EngagementEdge {
            source: s,
            target: t,
            weight: w,
        })
        .collect();
    evaluation::pagerank(&edges, damping, tol, max_iter).map_err(err)
}

#[pyfunction]
fn pagerank_rank_correlation(scores: BTreeMap<String, f64>, influences: BTreeMap<String, f64>) -> PyResult<f64> {
    evaluation::pagerank_rank_correlation(&scores, &influences).map_err(err)
}

#[pyclass(name = "KMeans1D", frozen)]
struct PyKMeans {
    inner: KMeans1D,
}

#[pymethods]
impl PyKMeans {
    #[getter]
    fn centroids(&self) -> Vec<f64> {
        self.inner.centroids.clone()
    }

    #[getter]
    fn inertia(&self) -> f64 {
        self.inner.inertia
    }

    fn assign(&self, values: Vec<f64>) -> Vec<usize> {
        values.into_iter().map(|v| self.inner.assign(v)).collect()
    }

    fn __repr__(&self) -> String {
        format!("KMeans1D(centroids={:?}, inertia={})", self.inner.centroids, self.inner.inertia)
    }
}

#[pyfunction]
#[pyo3(signature = (values, k, restarts=10, seed=42))]
fn kmeans_1d(values: Vec<f64>, k: usize, restarts: usize, seed: u64) -> PyResult<PyKMeans> {
    let inner = segmentation::fit_kmeans_1d(&values, k, restarts, seed).map_err(err)?;
    Ok(PyKMeans { inner })
}

/// Users with their retained posts and influence.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: dataset::Dataset,
    ground_truth: Option<Vec<(String, f64)>>,
}

#[pymethods]
impl PyDataset {
    /// Reads posts (JSONL or CSV, by extension) and a `user_id,followers`
    /// file, then filters users and drops outlier posts.
    #[staticmethod]
    #[pyo3(signature = (posts_path, users_path, min_posts=10, z_threshold=2.0))]
    fn from_files(posts_path: &str, users_path: &str, min_posts: usize, z_threshold: f64) -> PyResult<Self> {
        let format = if posts_path.to_ascii_lowercase().ends_with(".csv") {
            PostFormat::Csv
        } else {
            PostFormat::Jsonl
        };
        let posts = dataset::parse_posts(open(posts_path)?, format).map_err(err)?;
        let followers = dataset::parse_followers(open(users_path)?).map_err(err)?;
        let inner = dataset::build_dataset(&posts, &followers, min_posts, z_threshold, Provenance::Ingested, None)
            .map_err(err)?;
        Ok(PyDataset {
            inner,
            ground_truth: None,
        })
    }

    /// Synthetic corpus; every generated post is kept.
    #[staticmethod]
    #[pyo3(signature = (n_users=5000, seed=42))]
    fn synthetic(n_users: usize, seed: u64) -> PyResult<Self> {
        let out = synth::generate(&SynthConfig {
            n_users,
            seed,
            ..SynthConfig::default()
        })
        .map_err(err)?;
        Ok(PyDataset {
            inner: out.dataset,
            ground_truth: Some(out.ground_truth),
        })
    }

    /// Re-runs user filtering and outlier removal on the posts held here.
    #[pyo3(signature = (min_posts=10, z_threshold=2.0))]
    fn ingest(&self, min_posts: usize, z_threshold: f64) -> PyResult<Self> {
        let posts: Vec<_> = self.inner.all_posts().cloned().collect();
        let followers: HashMap<String, u64> = self
            .inner
            .users
            .iter()
            .map(|u| (u.user_id.clone(), u.followers))
            .collect();
        let inner = dataset::build_dataset(&posts, &followers, min_posts, z_threshold, self.inner.provenance, self.inner.seed)
            .map_err(err)?;
        Ok(PyDataset {
            inner,
            ground_truth: self.ground_truth.clone(),
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn user_ids(&self) -> Vec<String> {
        self.inner.users.iter().map(|u| u.user_id.clone()).collect()
    }

    #[getter]
    fn influence(&self) -> Vec<f64> {
        self.inner.influences()
    }

    #[getter]
    fn followers(&self) -> Vec<f64> {
        self.inner.followers()
    }

    /// Known influence per user for synthetic data, else `None`.
    #[getter]
    fn ground_truth(&self) -> Option<BTreeMap<String, f64>> {
        self.ground_truth.as_ref().map(|g| g.iter().cloned().collect())
    }

    /// Eight feature columns per user, in `FEATURE_NAMES` order.
    #[pyo3(signature = (transform_scales=false))]
    fn features(&self, transform_scales: bool) -> PyResult<Vec<Vec<f64>>> {
        let table = FeatureTable::from_dataset(&self.inner, transform_scales).map_err(err)?;
        Ok(table.features.rows().map(<[f64]>::to_vec).collect())
    }

    /// Commenter -> author edges as `(source, target, weight)`.
    #[pyo3(signature = (seed=42))]
    fn commentator_graph(&self, seed: u64) -> Vec<(String, String, u64)> {
        synth::commentator_graph(&self.inner, seed)
            .into_iter()
            .map(|e| (e.source, e.target, e.weight))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(users={}, posts={})", self.inner.len(), self.inner.all_posts().count())
    }
}

/// A fitted model over the raw eight-column feature table.
#[pyclass(name = "Pipeline", frozen)]
struct PyPipeline {
    inner: TrainedPipeline,
}

fn model_spec(model: &str, alpha: f64, n_trees: usize, min_samples_leaf: usize, seed: u64) -> PyResult<ModelSpec> {
    match model {
        "ridge" => Ok(ModelSpec::Ridge { alpha }),
        "forest" => Ok(ModelSpec::Forest(ForestConfig {
            n_trees,
            min_samples_leaf,
            seed,
            ..ForestConfig::default()
        })),
        other => Err(InfluenceError::new_err(format!("[invalid_config] unknown model {other:?}"))),
    }
}

#[pymethods]
impl PyPipeline {
    #[staticmethod]
    #[pyo3(signature = (
        features, influence, model="ridge", alpha=1.0, n_trees=100, min_samples_leaf=5,
        rfe=None, multi_k=None, transform_scales=true, log_target=false, seed=42
    ))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        features: Vec<Vec<f64>>,
        influence: Vec<f64>,
        model: &str,
        alpha: f64,
        n_trees: usize,
        min_samples_leaf: usize,
        rfe: Option<usize>,
        multi_k: Option<usize>,
        transform_scales: bool,
        log_target: bool,
        seed: u64,
    ) -> PyResult<Self> {
        let config = PipelineConfig {
            spec: model_spec(model, alpha, n_trees, min_samples_leaf, seed)?,
            selection: rfe.map_or(FeatureSelection::All, |target| FeatureSelection::Rfe { target }),
            transform_scales,
            multi_k,
            log_target,
            seed,
        };
        let inner = TrainedPipeline::fit(&config, &matrix(features)?, &influence).map_err(err)?;
        Ok(PyPipeline { inner })
    }

    fn predict(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict(&matrix(features)?).map_err(err)
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| err(e.into()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| err(e.into()))?;
        Ok(PyPipeline { inner })
    }

    fn __repr__(&self) -> String {
        format!("Pipeline(features={:?})", self.inner.feature_names)
    }
}

#[pyclass(name = "Report", frozen)]
struct PyReport {
    inner: EvalReport,
}

#[pymethods]
impl PyReport {
    /// `(model_name, r2, r_s, r2_multi, r_s_multi)` per row.
    #[getter]
    fn rows(&self) -> Vec<(String, f64, f64, f64, f64)> {
        self.inner
            .rows
            .iter()
            .map(|r| (r.model_name.clone(), r.r2_regression, r.rs_regression, r.r2_multi, r.rs_multi))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| err(e.into()))
    }

    fn __str__(&self) -> String {
        self.inner.to_text_table()
    }
}

#[pyfunction]
#[pyo3(signature = (dataset, seed=42, k_folds=5, k_clusters=3, n_trees=100))]
fn run_benchmark(dataset: &PyDataset, seed: u64, k_folds: usize, k_clusters: usize, n_trees: usize) -> PyResult<PyReport> {
    let options = BenchmarkOptions {
        k_folds,
        k_clusters,
        forest: ForestConfig {
            n_trees,
            seed,
            ..ForestConfig::default()
        },
        ..BenchmarkOptions::new(seed)
    };
    let inner = evaluation::run_benchmark_with(&dataset.inner, &options).map_err(err)?;
    Ok(PyReport { inner })
}

#[pymodule]
fn influence(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfluenceError", m.py().get_type::<InfluenceError>())?;
    m.add("FEATURE_NAMES", FEATURE_NAMES.to_vec())?;
    m.add_function(wrap_pyfunction!(log_scale, m)?)?;
    m.add_function(wrap_pyfunction!(r_squared, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(kfold_split, m)?)?;
    m.add_function(wrap_pyfunction!(pagerank, m)?)?;
    m.add_function(wrap_pyfunction!(pagerank_rank_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans_1d, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add_class::<PyKMeans>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyPipeline>()?;
    m.add_class::<PyReport>()?;
    Ok(())
}
