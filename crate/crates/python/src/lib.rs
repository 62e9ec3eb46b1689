//! Python bindings: corpora, the cutoff and review metrics, selection
//! strategies and whole experiments.

use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tarsim::harness::report::ReportContext;
use tarsim::harness::{emit_reports, ExperimentTrace};
use tarsim::metrics::{optimum_from_fractions, DEFAULT_TOLERANCES};
use tarsim::rng::rng_from_seed;
use tarsim::synthetic::{generate, SyntheticSpec};
use tarsim::{
    CutoffContext, Document, Error, ErrorCategory, ExperimentConfig, GridConfig, PreparedCorpus, RoundRecord,
    ScoredDoc, SelectionStrategy, ToleranceMode,
};

fn py_err(e: Error) -> PyErr {
    match (&e, e.category()) {
        (Error::MissingFile(_), _) => PyFileNotFoundError::new_err(e.to_string()),
        (_, ErrorCategory::Runtime) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A labeled document collection.
#[pyclass(name = "Corpus", module = "tarsim_py", frozen)]
struct PyCorpus {
    inner: tarsim::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Reads a JSON-lines corpus file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        tarsim::load_corpus(path)
            .map(|inner| PyCorpus { inner })
            .map_err(py_err)
    }

    /// Builds a corpus from `(id, text, label)` tuples.
    #[staticmethod]
    fn from_records(records: Vec<(String, String, bool)>) -> PyResult<Self> {
        let docs = records
            .into_iter()
            .map(|(id, text, label)| Document::new(id, text, label))
            .collect();
        tarsim::Corpus::from_documents(docs)
            .map(|inner| PyCorpus { inner })
            .map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.total()
    }

    #[getter]
    fn total(&self) -> usize {
        self.inner.total()
    }

    #[getter]
    fn positives(&self) -> usize {
        self.inner.positives()
    }

    /// Positive rate as a percentage.
    #[getter]
    fn richness(&self) -> f64 {
        self.inner.stats().richness()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.documents().iter().map(|d| d.id.to_string()).collect()
    }

    fn labels(&self) -> Vec<bool> {
        self.inner.labels().collect()
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.stats();
        let d = PyDict::new(py);
        d.set_item("total_documents", s.total)?;
        d.set_item("positive_documents", s.positives)?;
        d.set_item("negative_documents", s.negatives)?;
        d.set_item("richness", s.richness_display())?;
        Ok(d)
    }

    fn save_jsonl(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_jsonl(path).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(total={}, positives={})",
            self.inner.total(),
            self.inner.positives()
        )
    }
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    tarsim::tokenize(text)
}

/// Generates a synthetic corpus and its keyword phrases.
#[pyfunction]
#[pyo3(signature = (n_docs=2000, richness=0.15, seed=7))]
fn generate_synthetic(n_docs: usize, richness: f64, seed: u64) -> PyResult<(PyCorpus, Vec<String>)> {
    let spec = SyntheticSpec {
        n_docs,
        richness,
        seed,
        ..Default::default()
    };
    let s = generate(&spec).map_err(py_err)?;
    let keywords = s.keywords.phrases().iter().map(|p| p.join(" ")).collect();
    Ok((PyCorpus { inner: s.corpus }, keywords))
}

fn scored(doc_ids: Option<Vec<String>>, scores: &[f64], labels: &[bool]) -> PyResult<Vec<ScoredDoc>> {
    if scores.len() != labels.len() || doc_ids.as_ref().is_some_and(|ids| ids.len() != scores.len()) {
        return Err(PyValueError::new_err(
            "doc_ids, scores and labels must have equal lengths",
        ));
    }
    let ids = doc_ids.unwrap_or_else(|| (0..scores.len()).map(|i| i.to_string()).collect());
    Ok(ids
        .into_iter()
        .zip(scores.iter().zip(labels))
        .map(|(id, (&s, &l))| ScoredDoc::new(id, s, l))
        .collect())
}

/// Score of the positive that completes the target recall; `inf` when the
/// training set already reaches it.
#[pyfunction]
#[pyo3(signature = (scores, labels, total_positives, training_positives, target_recall=0.75))]
fn oracle_cutoff(
    scores: Vec<f64>,
    labels: Vec<bool>,
    total_positives: usize,
    training_positives: usize,
    target_recall: f64,
) -> PyResult<f64> {
    let pool = scored(None, &scores, &labels)?;
    let ctx = CutoffContext {
        total_positives,
        training_positives,
        target_recall,
    };
    tarsim::oracle_cutoff(&pool, &ctx).map_err(py_err)
}

fn record_dict<'py>(py: Python<'py>, r: &RoundRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("round", r.round)?;
    d.set_item("train_size", r.train_size)?;
    d.set_item("train_positives", r.train_positives)?;
    d.set_item("cutoff", r.cutoff)?;
    d.set_item("docs_at_or_above_cutoff", r.docs_at_or_above_cutoff)?;
    d.set_item("positives_at_or_above_cutoff", r.positives_at_or_above_cutoff)?;
    d.set_item("review_fraction", r.review_fraction())?;
    d.set_item("recall_achieved", r.recall_achieved())?;
    Ok(d)
}

/// Share of the corpus a reviewer reads to reach the target recall.
#[pyfunction]
#[pyo3(signature = (scores, labels, train_size, train_positives, total_docs, total_positives, target_recall=0.75, round=0))]
#[allow(clippy::too_many_arguments)]
fn review_at_recall<'py>(
    py: Python<'py>,
    scores: Vec<f64>,
    labels: Vec<bool>,
    train_size: usize,
    train_positives: usize,
    total_docs: usize,
    total_positives: usize,
    target_recall: f64,
    round: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let pool = scored(None, &scores, &labels)?;
    let r = tarsim::review_at_recall(
        round,
        &pool,
        train_size,
        train_positives,
        total_docs,
        total_positives,
        target_recall,
    )
    .map_err(py_err)?;
    record_dict(py, &r)
}

fn parse_mode(mode: &str) -> PyResult<ToleranceMode> {
    match mode {
        "relative" => Ok(ToleranceMode::Relative),
        "absolute" => Ok(ToleranceMode::Absolute),
        other => Err(PyValueError::new_err(format!("unknown tolerance mode {other:?}"))),
    }
}

/// Optimum round and first rounds within each tolerance, from review
/// fractions indexed by round.
#[pyfunction]
#[pyo3(signature = (review_fractions, tolerances=None, mode="relative"))]
fn optimum_analysis<'py>(
    py: Python<'py>,
    review_fractions: Vec<f64>,
    tolerances: Option<Vec<f64>>,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let points: Vec<(usize, f64)> = review_fractions.into_iter().enumerate().collect();
    let tolerances = tolerances.unwrap_or_else(|| DEFAULT_TOLERANCES.to_vec());
    let rep = optimum_from_fractions(&points, &tolerances, parse_mode(mode)?).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("optimum_round", rep.optimum_round)?;
    d.set_item("optimum_review", rep.optimum_review)?;
    d.set_item("first_within", rep.first_within)?;
    Ok(d)
}

/// Picks `k` documents from a scored pool with the named strategy
/// (`TOP`, `MID-50`, `MID_75RC`, `RAND`, `80TOP20RD`, ...).
#[pyfunction]
#[pyo3(signature = (strategy, doc_ids, scores, labels, k, total_positives, training_positives, target_recall=0.75, seed=0))]
#[allow(clippy::too_many_arguments)]
fn select(
    strategy: &str,
    doc_ids: Vec<String>,
    scores: Vec<f64>,
    labels: Vec<bool>,
    k: usize,
    total_positives: usize,
    training_positives: usize,
    target_recall: f64,
    seed: u64,
) -> PyResult<Vec<String>> {
    let strategy: SelectionStrategy = strategy.parse().map_err(py_err)?;
    let pool = scored(Some(doc_ids), &scores, &labels)?;
    let ctx = CutoffContext {
        total_positives,
        training_positives,
        target_recall,
    };
    let picked = strategy
        .select(&pool, k, &ctx, &mut rng_from_seed(seed))
        .map_err(py_err)?;
    Ok(picked.into_iter().map(|id| id.to_string()).collect())
}

fn trace_dict<'py>(py: Python<'py>, t: &ExperimentTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("experiment_id", &t.experiment_id)?;
    d.set_item("seed_method", t.config.seed_method.name())?;
    d.set_item("al_strategy", t.config.al_strategy.to_string())?;
    d.set_item("replicate", t.replicate)?;
    d.set_item("seed_size", t.seed.len())?;
    d.set_item("seed_positives", t.seed_positives)?;
    let termination = match t.termination {
        tarsim::harness::Termination::Exhausted => "exhausted",
        tarsim::harness::Termination::MaxRounds => "max_rounds",
        tarsim::harness::Termination::TargetMet => "target_met",
    };
    d.set_item("termination", termination)?;
    let rounds = t
        .rounds
        .iter()
        .map(|r| record_dict(py, r))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("rounds", rounds)?;
    Ok(d)
}

/// Runs one experiment described by a JSON configuration string.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let config = ExperimentConfig::from_json_str(config_json).map_err(py_err)?;
    let trace = py
        .detach(|| {
            let prepared = PreparedCorpus::for_params(&config.params, &[config.seed_method])?;
            tarsim::run_experiment(&config, &prepared)
        })
        .map_err(py_err)?;
    trace_dict(py, &trace)
}

/// Runs a grid described by a JSON configuration string and optionally
/// writes the report files.
#[pyfunction]
#[pyo3(signature = (config_json, workers=1, out_dir=None))]
fn run_grid<'py>(
    py: Python<'py>,
    config_json: &str,
    workers: usize,
    out_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = GridConfig::from_json_str(config_json).map_err(py_err)?;
    let outcome = py
        .detach(|| {
            let prepared = PreparedCorpus::for_params(&grid.params, &grid.seed_methods)?;
            let outcome = tarsim::run_grid(&grid, &prepared, workers)?;
            if let Some(dir) = &out_dir {
                let context = ReportContext::from_prepared(&prepared, grid.to_json_value(), grid.params.tolerance_mode);
                emit_reports(&outcome.traces, &outcome.failures, &context, dir)?;
            }
            Ok::<_, Error>(outcome)
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    let traces = outcome
        .traces
        .iter()
        .map(|t| trace_dict(py, t))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("traces", traces)?;
    let failures: Vec<(String, String)> = outcome
        .failures
        .iter()
        .map(|f| (f.experiment_id.clone(), f.error.clone()))
        .collect();
    d.set_item("failures", failures)?;
    Ok(d)
}

#[pymodule]
fn tarsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_cutoff, m)?)?;
    m.add_function(wrap_pyfunction!(review_at_recall, m)?)?;
    m.add_function(wrap_pyfunction!(optimum_analysis, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_grid, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
