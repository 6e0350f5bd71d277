//! Python bindings. Records cross the boundary as plain dicts and lists.

use std::collections::BTreeSet;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use cpgvul::augment::{self, AugmentError, MutationKind, MutationOp};
use cpgvul::autodiff::Checkpoint;
use cpgvul::cfront::parse_source;
use cpgvul::cpg::{build_cpg, pdg_of};
use cpgvul::ensemble::{self, Classifier};
use cpgvul::ggnn::{self, Hyper, ModelState};
use cpgvul::ingest::{self, CweLabel, FunctionRecord, FunctionRole, GraphRecord};
use cpgvul::slicer::{align_statements, related_in_vulnerable, slice_related};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn cwe(label: &str) -> PyResult<CweLabel> {
    label.parse().map_err(PyValueError::new_err)
}

/// Name and statements of one C function.
#[pyfunction]
fn parse_function<'py>(py: Python<'py>, code: &str) -> PyResult<Bound<'py, PyAny>> {
    let ast = parse_source(code).map_err(value_err)?;
    let stmts: Vec<serde_json::Value> = (0..ast.statement_count())
        .map(|s| serde_json::json!({ "id": s, "kind": ast.statement(s).kind.as_str(), "text": ast.statement_text(s) }))
        .collect();
    to_py(py, &serde_json::json!({ "name": ast.name, "statements": stmts }))
}

/// Code property graph of one function as a graph record dict.
#[pyfunction]
#[pyo3(signature = (code, label = 0, cwe_label = "CWE-120", function_id = "input"))]
fn build_graph<'py>(py: Python<'py>, code: &str, label: u8, cwe_label: &str, function_id: &str) -> PyResult<Bound<'py, PyAny>> {
    let ast = parse_source(code).map_err(value_err)?;
    to_py(py, &GraphRecord::from_cpg(&build_cpg(&ast, function_id), label, cwe(cwe_label)?))
}

/// Statements related to the change between two versions of a function:
/// `(related_vulnerable, related_patched, frozen)`.
#[pyfunction]
fn related_statements(vulnerable: &str, patched: &str) -> PyResult<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let v = parse_source(vulnerable).map_err(value_err)?;
    let p = parse_source(patched).map_err(value_err)?;
    let align = align_statements(&v, &p);
    let image: BTreeSet<usize> = align.values().copied().collect();
    let s_del: BTreeSet<usize> = (0..v.statement_count()).filter(|s| !image.contains(s)).collect();
    let s_add: BTreeSet<usize> = (0..p.statement_count()).filter(|s| !align.contains_key(s)).collect();
    let rel = slice_related(&pdg_of(&v), &pdg_of(&p), &s_del, &s_add).map_err(value_err)?;
    let frozen = related_in_vulnerable(&rel, &align);
    Ok((rel.related_v.into_iter().collect(), rel.related_p.into_iter().collect(), frozen.into_iter().collect()))
}

/// Applies one mutation operator (`rn`, `ai`, `del`, `add`, `ro`) leaving the
/// `frozen` statements intact. Returns None when nothing can be mutated.
#[pyfunction]
#[pyo3(signature = (code, op, seed = 0, frozen = Vec::new()))]
fn mutate<'py>(py: Python<'py>, code: &str, op: &str, seed: u64, frozen: Vec<usize>) -> PyResult<Option<Bound<'py, PyAny>>> {
    let kind: MutationKind = op.parse().map_err(PyValueError::new_err)?;
    let record = FunctionRecord::new("python", "input", CweLabel::ALL[0], FunctionRole::Vulnerable, code.to_string());
    match augment::mutate(&record, &frozen.into_iter().collect(), MutationOp { kind, seed }) {
        Ok(m) => Ok(Some(to_py(py, &serde_json::json!({ "code": m.code, "renames": m.renames }))?)),
        Err(AugmentError::NoCandidates(_)) => Ok(None),
        Err(e) => Err(value_err(e)),
    }
}

/// Weakness types whose keywords occur in a commit message.
#[pyfunction]
fn match_keywords(message: &str) -> Vec<String> {
    ingest::match_keywords(message).into_iter().map(|c| c.to_string()).collect()
}

/// Majority vote over five classifier outputs.
#[pyfunction]
fn vote<'py>(py: Python<'py>, logits: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ensemble::vote(&logits).map_err(value_err)?)
}

#[pyfunction]
fn metrics<'py>(py: Python<'py>, preds: Vec<u8>, labels: Vec<u8>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ensemble::metrics(&preds, &labels).map_err(value_err)?)
}

/// Runs the command line with `args` (without the program name); returns
/// its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    cpgvul_cli::run(std::iter::once("cpgvul".to_string()).chain(args))
}

/// One trained per-weakness classifier.
#[pyclass(module = "cpgvul_py", frozen)]
struct Model {
    state: ModelState,
}

#[pymethods]
impl Model {
    /// Untrained model over the tokens in `vocab` with default
    /// hyperparameters for the weakness type; `overrides` are (name, value)
    /// pairs.
    #[new]
    #[pyo3(signature = (cwe_label, vocab, overrides = Vec::new()))]
    fn new(cwe_label: &str, vocab: Vec<String>, overrides: Vec<(String, String)>) -> PyResult<Self> {
        let mut hyper = Hyper::for_cwe(cwe(cwe_label)?);
        for (k, v) in &overrides {
            hyper.set(k, v).map_err(value_err)?;
        }
        let specials = [ggnn::PAD_TOKEN, ggnn::UNK_TOKEN];
        let tokens = specials.iter().map(|s| s.to_string()).chain(vocab.into_iter().filter(|t| !specials.contains(&t.as_str()))).collect();
        let vocab = ggnn::Vocabulary::from_tokens(tokens).map_err(value_err)?;
        let state = ModelState::init(hyper, vocab).map_err(value_err)?;
        Ok(Model { state })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        let ck = Checkpoint::from_bytes(&bytes).map_err(value_err)?;
        Ok(Model { state: ModelState::from_checkpoint(ck).map_err(value_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(&path, self.state.to_checkpoint().to_bytes()).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))
    }

    /// Probability that the C function is vulnerable.
    fn predict(&self, code: &str) -> PyResult<f64> {
        let ast = parse_source(code).map_err(value_err)?;
        let g = GraphRecord::from_cpg(&build_cpg(&ast, "input"), 0, CweLabel::ALL[0]);
        self.state.classify(&g).map_err(value_err)
    }

    /// Hyperparameters as strings.
    #[getter]
    fn hyperparameters(&self) -> std::collections::BTreeMap<String, String> {
        self.state.hyper.to_pairs()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.state.vocab.len()
    }

    fn parameter_names(&self) -> Vec<String> {
        self.state.params.keys().cloned().collect()
    }

    /// Shape of a named parameter tensor.
    fn parameter_shape(&self, name: &str) -> PyResult<(usize, usize)> {
        let t = self.state.params.get(name).ok_or_else(|| PyValueError::new_err(format!("no parameter `{name}`")))?;
        Ok((t.rows(), t.cols()))
    }

    /// Largest relative error between analytic and numeric gradients on the
    /// graph of `code`.
    #[pyo3(signature = (code, label = 1, samples = 100, seed = 0))]
    fn gradient_check(&self, code: &str, label: u8, samples: usize, seed: u64) -> PyResult<f64> {
        let ast = parse_source(code).map_err(value_err)?;
        let g = GraphRecord::from_cpg(&build_cpg(&ast, "input"), label, CweLabel::ALL[0]);
        let enc = self.state.encode(&g).map_err(value_err)?;
        ggnn::check_gradients(&self.state, &enc, samples, seed, seed).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        let h = &self.state.hyper;
        format!("Model(cwe={}, variant={}, d={}, hops={}, vocab={})", h.cwe.map_or("-".into(), |c| c.to_string()), h.variant, h.d, h.hops, self.state.vocab.len())
    }
}

/// The five classifiers loaded from a checkpoint directory.
#[pyclass(module = "cpgvul_py", frozen)]
struct Ensemble {
    models: Vec<ModelState>,
}

#[pymethods]
impl Ensemble {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        let models = CweLabel::ALL
            .iter()
            .map(|c| Model::load(dir.join(format!("{c}.ckpt"))).map(|m| m.state))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Ensemble { models })
    }

    #[pyo3(signature = (code, max_nodes = 800))]
    fn predict<'py>(&self, py: Python<'py>, code: &str, max_nodes: usize) -> PyResult<Bound<'py, PyAny>> {
        let refs: Vec<&dyn Classifier> = self.models.iter().map(|m| m as &dyn Classifier).collect();
        to_py(py, &ensemble::predict_function(code, &refs, max_nodes).map_err(value_err)?)
    }
}

#[pymodule]
fn cpgvul_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CWE_LABELS", CweLabel::ALL.iter().map(|c| c.to_string()).collect::<Vec<_>>())?;
    m.add("MUTATION_OPS", MutationKind::ALL.iter().map(|k| k.to_string()).collect::<Vec<_>>())?;
    m.add_function(wrap_pyfunction!(parse_function, m)?)?;
    m.add_function(wrap_pyfunction!(build_graph, m)?)?;
    m.add_function(wrap_pyfunction!(related_statements, m)?)?;
    m.add_function(wrap_pyfunction!(mutate, m)?)?;
    m.add_function(wrap_pyfunction!(match_keywords, m)?)?;
    m.add_function(wrap_pyfunction!(vote, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add_class::<Model>()?;
    m.add_class::<Ensemble>()?;
    Ok(())
}
