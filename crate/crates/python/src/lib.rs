//! Python bindings: tokenization, dictionaries, metrics, threshold tools,
//! trained classifiers loaded from checkpoints, and the command-line driver.

use std::collections::BTreeSet;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use docclass::eval::LabelSet;
use docclass::experiment::{Checkpoint, Classifier as CoreClassifier};
use docclass::models::ThresholdPolicy;
use docclass::text::TokenSequence;
use docclass::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Training(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn label_sets(sets: Vec<Vec<usize>>) -> Vec<LabelSet> {
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Split on whitespace, trim punctuation, lowercase, and map numbers to `<num>`.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    docclass::text::tokenize(text).tokens
}

#[pyclass(module = "pydocclass", frozen)]
struct Dictionary {
    inner: docclass::text::Dictionary,
}

#[pymethods]
impl Dictionary {
    /// The `size` most frequent tokens of `texts`.
    #[staticmethod]
    fn build(texts: Vec<String>, size: usize) -> PyResult<Self> {
        let seqs: Vec<TokenSequence> = texts.iter().map(|t| docclass::text::tokenize(t)).collect();
        let inner = docclass::text::build_dictionary(&seqs, size).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: docclass::text::Dictionary::load(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn word_count(&self) -> usize {
        self.inner.word_count()
    }

    #[getter]
    fn oov_index(&self) -> usize {
        self.inner.oov_index()
    }

    #[getter]
    fn pad_index(&self) -> usize {
        self.inner.pad_index()
    }

    #[getter]
    fn words(&self) -> Vec<String> {
        self.inner.ranked_words().to_vec()
    }

    fn index_of(&self, word: &str) -> Option<usize> {
        self.inner.index_of(word)
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    /// Binary bag-of-words vector of `text`.
    fn vectorize_bow(&self, text: &str) -> Vec<u8> {
        docclass::text::vectorize_bow(&docclass::text::tokenize(text), &self.inner)
    }

    /// Index sequence of exactly `length` entries (truncated or padded).
    fn vectorize_sequence(&self, text: &str, length: usize) -> PyResult<Vec<usize>> {
        docclass::text::vectorize_sequence(&docclass::text::tokenize(text), &self.inner, length)
            .map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.word_count()
    }

    fn __repr__(&self) -> String {
        format!("Dictionary(words={})", self.inner.word_count())
    }
}

/// Micro-averaged metrics; returns `(precision, recall, f1, (tp, fp, fn, tn))`.
#[pyfunction]
fn micro_prf(
    pred: Vec<Vec<usize>>,
    gold: Vec<Vec<usize>>,
    n_labels: usize,
) -> PyResult<(f64, f64, f64, (u64, u64, u64, u64))> {
    let m =
        docclass::eval::micro_prf(&label_sets(pred), &label_sets(gold), n_labels).map_err(to_py)?;
    let c = m.counts;
    Ok((m.precision, m.recall, m.f1, (c.tp, c.fp, c.fn_, c.tn)))
}

/// Grid `0, step, ..., 1`.
#[pyfunction]
#[pyo3(signature = (step = 0.01))]
fn threshold_grid(step: f64) -> PyResult<Vec<f64>> {
    docclass::models::threshold_grid(step).map_err(to_py)
}

/// Returns `(best_tau, best_f1, [(tau, precision, recall, f1), ...])`.
#[pyfunction]
#[pyo3(signature = (scores, gold, grid_step = 0.01))]
fn sweep_threshold(
    scores: Vec<Vec<f64>>,
    gold: Vec<Vec<usize>>,
    grid_step: f64,
) -> PyResult<(f64, f64, Vec<(f64, f64, f64, f64)>)> {
    let s =
        docclass::models::sweep_threshold(&scores, &label_sets(gold), grid_step).map_err(to_py)?;
    let table = s
        .table
        .iter()
        .map(|r| (r.tau, r.precision, r.recall, r.f1))
        .collect();
    Ok((s.best_tau, s.best_f1, table))
}

/// Micro ROC; returns `[(tau, tpr, fpr), ...]` in grid order.
#[pyfunction]
#[pyo3(signature = (scores, gold, grid = None))]
fn roc_curve(
    scores: Vec<Vec<f64>>,
    gold: Vec<Vec<usize>>,
    grid: Option<Vec<f64>>,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let grid = match grid {
        Some(g) => g,
        None => docclass::models::threshold_grid(0.01).map_err(to_py)?,
    };
    let roc = docclass::eval::roc_curve(&scores, &label_sets(gold), &grid).map_err(to_py)?;
    Ok(roc.iter().map(|p| (p.tau, p.tpr, p.fpr)).collect())
}

/// Indexes of the scores strictly above `tau`.
#[pyfunction]
fn decide_labels(scores: Vec<f64>, tau: f64) -> PyResult<BTreeSet<usize>> {
    Ok(docclass::models::decide_labels(
        &scores,
        ThresholdPolicy::new(tau).map_err(to_py)?,
    ))
}

/// A trained model with its dictionary, label space and threshold.
#[pyclass(module = "pydocclass")]
struct Classifier {
    inner: CoreClassifier,
}

#[pymethods]
impl Classifier {
    /// Load a checkpoint; the dictionary must match the hash it records.
    #[staticmethod]
    fn load(checkpoint: PathBuf, dictionary: PathBuf) -> PyResult<Self> {
        let ckpt = Checkpoint::load(checkpoint).map_err(to_py)?;
        let dict = docclass::text::Dictionary::load(dictionary).map_err(to_py)?;
        Ok(Self {
            inner: CoreClassifier::from_checkpoint(ckpt, dict).map_err(to_py)?,
        })
    }

    #[getter]
    fn architecture(&self) -> String {
        self.inner.architecture().to_string()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels.labels().to_vec()
    }

    #[getter]
    fn get_tau(&self) -> f64 {
        self.inner.tau
    }

    #[setter]
    fn set_tau(&mut self, tau: f64) -> PyResult<()> {
        self.inner.tau = ThresholdPolicy::new(tau).map_err(to_py)?.tau();
        Ok(())
    }

    /// One score per label.
    fn scores(&self, text: &str) -> PyResult<Vec<f64>> {
        self.inner
            .scores(&docclass::text::tokenize(text))
            .map_err(to_py)
    }

    /// Labels whose score exceeds the threshold.
    fn predict(&self, text: &str) -> PyResult<Vec<String>> {
        self.inner.predict_text(text).map_err(to_py)
    }

    fn predict_many(&self, py: Python<'_>, texts: Vec<String>) -> PyResult<Vec<Vec<String>>> {
        let inner = &self.inner;
        py.detach(|| {
            texts
                .iter()
                .map(|t| inner.predict_text(t))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Classifier(architecture={}, labels={}, tau={})",
            self.inner.architecture(),
            self.inner.labels.len(),
            self.inner.tau
        )
    }
}

/// Write a seeded synthetic JSONL corpus with planted label signals.
#[pyfunction]
#[pyo3(signature = (path, n_docs = 2000, seed = 2016))]
fn write_synthetic_corpus(path: PathBuf, n_docs: usize, seed: u64) -> PyResult<usize> {
    let docs = docclass::synthetic::generate(&docclass::synthetic::SyntheticConfig {
        n_docs,
        seed,
        ..Default::default()
    })
    .map_err(to_py)?;
    docclass::corpus::write_corpus(&path, &docs).map_err(to_py)?;
    Ok(docs.len())
}

/// Run a command-line invocation, e.g. `run_cli(["cv", "--spec", "s.json"])`;
/// returns the path written.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> PyResult<PathBuf> {
    py.detach(|| docclass::cli::run_with(std::iter::once("docclass".to_string()).chain(args)))
        .map_err(to_py)
}

#[pymodule]
fn pydocclass(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(micro_prf, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_grid, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(roc_curve, m)?)?;
    m.add_function(wrap_pyfunction!(decide_labels, m)?)?;
    m.add_function(wrap_pyfunction!(write_synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add_class::<Dictionary>()?;
    m.add_class::<Classifier>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
