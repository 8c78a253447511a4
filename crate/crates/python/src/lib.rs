//! Python bindings: valuations, the combination operators and measures,
//! single runs and sweeps.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kleene_consensus::experiment::{figure_config as canned_config, write_aggregate_csv};
use kleene_consensus::{self as kc, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        e if e.is_config_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn profile(weights: Vec<f64>) -> PyResult<kc::PayoffProfile> {
    kc::PayoffProfile::new(weights).map_err(to_py)
}

#[pyclass(
    eq,
    eq_int,
    frozen,
    hash,
    from_py_object,
    module = "kleene_consensus_py"
)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum TruthValue {
    #[pyo3(name = "FALSE")]
    False = 0,
    #[pyo3(name = "BORDERLINE")]
    Borderline = 1,
    #[pyo3(name = "TRUE")]
    True = 2,
}

impl From<kc::TruthValue> for TruthValue {
    fn from(t: kc::TruthValue) -> Self {
        match t {
            kc::TruthValue::False => TruthValue::False,
            kc::TruthValue::Borderline => TruthValue::Borderline,
            kc::TruthValue::True => TruthValue::True,
        }
    }
}

impl From<TruthValue> for kc::TruthValue {
    fn from(t: TruthValue) -> Self {
        match t {
            TruthValue::False => kc::TruthValue::False,
            TruthValue::Borderline => kc::TruthValue::Borderline,
            TruthValue::True => kc::TruthValue::True,
        }
    }
}

#[pymethods]
impl TruthValue {
    /// Numeric value: 0.0, 0.5 or 1.0.
    fn value(&self) -> f64 {
        kc::TruthValue::from(*self).as_f64()
    }

    fn neg(&self) -> TruthValue {
        kc::TruthValue::from(*self).neg().into()
    }

    fn conj(&self, other: TruthValue) -> TruthValue {
        kc::TruthValue::from(*self).conj(other.into()).into()
    }

    fn disj(&self, other: TruthValue) -> TruthValue {
        kc::TruthValue::from(*self).disj(other.into()).into()
    }
}

/// A three-valued valuation, written as a string over `0`, `?`, `1`.
#[pyclass(frozen, skip_from_py_object, module = "kleene_consensus_py")]
#[derive(Clone)]
struct Valuation(kc::Valuation);

#[pymethods]
impl Valuation {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Valuation).map_err(to_py)
    }

    /// Build from the orthopair: indices valued true and indices valued false.
    #[staticmethod]
    fn from_sets(n: usize, positives: Vec<usize>, negatives: Vec<usize>) -> PyResult<Self> {
        kc::Valuation::new(n, positives, negatives)
            .map(Valuation)
            .map_err(to_py)
    }

    fn truth_of(&self, i: usize) -> PyResult<TruthValue> {
        self.0
            .get(i)
            .map(Into::into)
            .ok_or_else(|| PyValueError::new_err(format!("variable {i} out of range")))
    }

    #[getter]
    fn positives(&self) -> Vec<usize> {
        self.0.positives().collect()
    }

    #[getter]
    fn negatives(&self) -> Vec<usize> {
        self.0.negatives().collect()
    }

    fn vagueness(&self) -> f64 {
        kc::vagueness(&self.0)
    }

    fn is_crisp(&self) -> bool {
        self.0.is_crisp()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Valuation('{}')", self.0)
    }

    fn __eq__(&self, other: &Valuation) -> bool {
        self.0 == other.0
    }

    fn __hash__(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.0.hash(&mut h);
        h.finish()
    }
}

/// A sentence over propositional variables.
#[pyclass(frozen, skip_from_py_object, module = "kleene_consensus_py")]
#[derive(Clone)]
struct Sentence(kc::Sentence);

#[pymethods]
impl Sentence {
    #[staticmethod]
    fn var(i: usize) -> Self {
        Sentence(kc::Sentence::var(i))
    }

    fn negate(&self) -> Self {
        Sentence(kc::Sentence::negate(self.0.clone()))
    }

    fn and_(&self, other: &Sentence) -> Self {
        Sentence(kc::Sentence::and(self.0.clone(), other.0.clone()))
    }

    fn or_(&self, other: &Sentence) -> Self {
        Sentence(kc::Sentence::or(self.0.clone(), other.0.clone()))
    }

    fn evaluate(&self, v: &Valuation) -> PyResult<TruthValue> {
        self.0.evaluate(&v.0).map(Into::into).map_err(to_py)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyfunction]
fn consensus(v1: &Valuation, v2: &Valuation) -> PyResult<Valuation> {
    kc::consensus(&v1.0, &v2.0).map(Valuation).map_err(to_py)
}

/// Stochastic Boolean combination with coins drawn from `seed`.
#[pyfunction]
fn boolean_consensus(v1: &Valuation, v2: &Valuation, seed: u64) -> PyResult<Valuation> {
    let mut rng = kc::sim::run_rng(seed, 0);
    kc::boolean_stochastic_consensus(&v1.0, &v2.0, &mut rng)
        .map(Valuation)
        .map_err(to_py)
}

#[pyfunction]
fn inconsistency(v1: &Valuation, v2: &Valuation) -> PyResult<f64> {
    kc::inconsistency(&v1.0, &v2.0).map_err(to_py)
}

#[pyfunction]
fn vagueness(v: &Valuation) -> f64 {
    kc::vagueness(&v.0)
}

#[pyfunction]
fn valuation_payoff(v: &Valuation, weights: Vec<f64>) -> PyResult<f64> {
    kc::valuation_payoff(&v.0, &profile(weights)?).map_err(to_py)
}

#[pyfunction]
fn max_payoff(weights: Vec<f64>) -> PyResult<f64> {
    Ok(kc::max_payoff(&profile(weights)?))
}

#[pyfunction]
fn selection_weight(v: &Valuation, weights: Vec<f64>) -> PyResult<f64> {
    kc::selection_weight(&v.0, &profile(weights)?).map_err(to_py)
}

/// Runs one simulation and returns a dict with `endpoint`, `trajectory`,
/// `combinations`, `profile` and `warnings`.
#[pyfunction]
#[pyo3(signature = (
    population_size=100, n=5, gamma=0.5, operator="three-valued", selection="uniform",
    init="three-valued", iterations=50_000, seed=0, stream=0, profile=None,
    record_every=100, early_stop=false
))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    population_size: usize,
    n: usize,
    gamma: f64,
    operator: &str,
    selection: &str,
    init: &str,
    iterations: u64,
    seed: u64,
    stream: u64,
    profile: Option<Vec<f64>>,
    record_every: u64,
    early_stop: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let config = kc::RunConfig {
        population_size,
        n,
        gamma,
        operator: operator.parse().map_err(to_py)?,
        selection: selection.parse().map_err(to_py)?,
        init: init.parse().map_err(to_py)?,
        iterations,
        seed,
        stream,
        payoff_profile: profile.map(self::profile).transpose()?,
        record_every,
        early_stop,
    };
    let metrics = py.detach(|| kc::run(&config)).map_err(to_py)?;

    let endpoint = PyDict::new(py);
    endpoint.set_item("vagueness", metrics.endpoint.vagueness)?;
    endpoint.set_item("distinct", metrics.endpoint.distinct)?;
    endpoint.set_item("payoff_pct", metrics.endpoint.payoff_pct)?;
    let trajectory: Vec<(u64, usize, f64, f64)> = metrics
        .trajectory
        .iter()
        .map(|p| (p.iteration, p.distinct, p.vagueness, p.payoff_pct))
        .collect();
    let out = PyDict::new(py);
    out.set_item("endpoint", endpoint)?;
    out.set_item("trajectory", trajectory)?;
    out.set_item("combinations", metrics.combinations)?;
    out.set_item("profile", metrics.profile.weights().to_vec())?;
    out.set_item("warnings", metrics.warnings)?;
    Ok(out)
}

/// Runs a sweep described by a JSON config and returns the aggregate CSV.
/// With `out_dir`, also writes the CSV, trajectory and metadata files there.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir=None))]
fn run_sweep(py: Python<'_>, config_json: &str, out_dir: Option<String>) -> PyResult<String> {
    let config = kc::SweepConfig::from_json(config_json).map_err(to_py)?;
    let result = py.detach(|| kc::run_sweep(&config)).map_err(to_py)?;
    if let Some(dir) = out_dir {
        kc::emit_results(&result, dir).map_err(to_py)?;
    }
    let mut buf = Vec::new();
    write_aggregate_csv(&mut buf, &result.records).map_err(to_py)?;
    String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Canned sweep configuration for figure 1-5, as JSON.
#[pyfunction]
fn figure_config(figure: u8) -> PyResult<String> {
    let config = canned_config(figure).map_err(to_py)?;
    serde_json::to_string(&config).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn kleene_consensus_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TruthValue>()?;
    m.add_class::<Valuation>()?;
    m.add_class::<Sentence>()?;
    m.add_function(wrap_pyfunction!(consensus, m)?)?;
    m.add_function(wrap_pyfunction!(boolean_consensus, m)?)?;
    m.add_function(wrap_pyfunction!(inconsistency, m)?)?;
    m.add_function(wrap_pyfunction!(vagueness, m)?)?;
    m.add_function(wrap_pyfunction!(valuation_payoff, m)?)?;
    m.add_function(wrap_pyfunction!(max_payoff, m)?)?;
    m.add_function(wrap_pyfunction!(selection_weight, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(figure_config, m)?)?;
    Ok(())
}
