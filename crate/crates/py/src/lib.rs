//! Python bindings for the `anonq` simulator.
//!
//! Reports cross the boundary as plain Python dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use anonq::adversary::{strategy_catalog, StrategySpec};
use anonq::harness::anonymity::{anonymity_strategies, AnonymitySpec};
use anonq::harness::{self, audit, exact, Assignment, BatchSpec, Transcript};
use anonq::protocol::ProtocolConfig;
use anonq::qauth::{self, Attack};

fn py_err(e: anonq::Error) -> PyErr {
    match e {
        anonq::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (_, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn report<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn strategy(name: &str) -> PyResult<StrategySpec> {
    name.parse().map_err(py_err)
}

/// Protocol parameters of one run.
#[pyclass(name = "Config", module = "anonq_py", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ProtocolConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (n, m, s, sender, receiver, corrupt = Vec::new(), seed = 0))]
    fn new(
        n: usize,
        m: usize,
        s: usize,
        sender: usize,
        receiver: usize,
        corrupt: Vec<usize>,
        seed: u64,
    ) -> PyResult<Self> {
        let inner = ProtocolConfig::new(n, m, s, sender, receiver)
            .with_corrupt(corrupt)
            .with_seed(seed);
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn s(&self) -> usize {
        self.inner.s
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn corrupt(&self) -> Vec<usize> {
        self.inner.corrupt.iter().copied().collect()
    }

    /// Copy with a different seed.
    fn with_seed(&self, seed: u64) -> Self {
        Self {
            inner: self.inner.clone().with_seed(seed),
        }
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "Config(n={}, m={}, s={}, sender={:?}, receiver={}, corrupt={:?}, seed={})",
            c.n, c.m, c.s, c.sender, c.receiver, c.corrupt, c.seed
        )
    }
}

/// Result of a single run.
#[pyclass(name = "RunResult", module = "anonq_py", get_all)]
struct PyRunResult {
    status: String,
    psi_holder: String,
    delivered_fidelity: Option<f64>,
    ghz_form_instances: usize,
    ghz_form_violations: usize,
    privacy_lost_possible: bool,
    transcript: String,
    transcript_hash: String,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(status={:?}, psi_holder={:?}, delivered_fidelity={:?})",
            self.status, self.psi_holder, self.delivered_fidelity
        )
    }
}

/// Names of every catalogued adversary strategy.
#[pyfunction]
fn strategies() -> Vec<String> {
    strategy_catalog().iter().map(|s| s.to_string()).collect()
}

/// Strategies covered by the anonymity tests.
#[pyfunction]
fn anonymity_strategy_names() -> Vec<String> {
    anonymity_strategies().iter().map(|s| s.to_string()).collect()
}

#[pyfunction]
#[pyo3(signature = (config, strategy = "honest-curious"))]
fn run(config: &PyConfig, strategy: &str) -> PyResult<PyRunResult> {
    let spec = self::strategy(strategy)?;
    let (out, events) = harness::run_trial(&config.inner, spec).map_err(py_err)?;
    let t = Transcript {
        config: config.inner.clone(),
        strategy: spec,
        events,
    };
    let record = harness::TrialRecord::new(0, &config.inner, &out, t.hash());
    Ok(PyRunResult {
        status: out.status.label(),
        psi_holder: variant_name(&out.psi_holder),
        delivered_fidelity: out.delivered_fidelity,
        ghz_form_instances: record.ghz_form_instances,
        ghz_form_violations: record.ghz_form_violations,
        privacy_lost_possible: out.privacy_lost_possible,
        transcript: t.render(),
        transcript_hash: record.transcript_hash,
    })
}

/// The serde name of a unit enum variant.
fn variant_name<T: Serialize + std::fmt::Debug>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => format!("{v:?}"),
    }
}

#[pyfunction]
#[pyo3(signature = (config, strategy = "honest-curious", trials = 100, assignment = "fixed", out = None))]
fn batch<'py>(
    py: Python<'py>,
    config: &PyConfig,
    strategy: &str,
    trials: usize,
    assignment: &str,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let assignment: Assignment = assignment.parse().map_err(py_err)?;
    let spec = BatchSpec::new(config.inner.clone(), self::strategy(strategy)?, trials).with_assignment(assignment);
    let r = py
        .detach(|| harness::run_batch(&spec, out.as_deref()))
        .map_err(py_err)?;
    report(py, &r)
}

#[pyfunction]
#[pyo3(signature = (n, corrupt, strategy = "honest-curious", trials_per_identity = 500, seed = 0))]
fn anonymity_test<'py>(
    py: Python<'py>,
    n: usize,
    corrupt: Vec<usize>,
    strategy: &str,
    trials_per_identity: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut spec = AnonymitySpec::new(n, corrupt, self::strategy(strategy)?);
    spec.trials_per_identity = trials_per_identity;
    spec.seed = seed;
    let r = py
        .detach(|| harness::anonymity::anonymity_test(&spec))
        .map_err(py_err)?;
    report(py, &r)
}

#[pyfunction]
#[pyo3(signature = (strategy = "honest-curious"))]
fn exact_anonymity<'py>(py: Python<'py>, strategy: &str) -> PyResult<Bound<'py, PyAny>> {
    let spec = self::strategy(strategy)?;
    let r = py.detach(|| exact::exact_anonymity(spec)).map_err(py_err)?;
    report(py, &r)
}

#[pyfunction]
#[pyo3(signature = (config, strategy = "honest-curious", trials = 200))]
fn fidelity_audit<'py>(
    py: Python<'py>,
    config: &PyConfig,
    strategy: &str,
    trials: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = BatchSpec::new(config.inner.clone(), self::strategy(strategy)?, trials);
    let r = py.detach(|| audit::fidelity_audit(&spec)).map_err(py_err)?;
    report(py, &r)
}

/// Re-runs a stored transcript (file path) and compares hashes.
#[pyfunction]
fn replay<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| harness::replay(&path)).map_err(py_err)?;
    report(py, &r)
}

/// Same as `replay`, from transcript text.
#[pyfunction]
fn replay_text<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    let r = harness::replay_text(text).map_err(py_err)?;
    report(py, &r)
}

/// Lower bound on `p q + (1 - p)` for the authentication scheme.
#[pyfunction]
fn security_bound(m: usize, s: usize) -> f64 {
    qauth::security_bound(m, s)
}

/// Mean and standard error of `p q + (1 - p)` over `trials` attacks.
#[pyfunction]
#[pyo3(signature = (m, s, attack, trials = 1000, seed = 0))]
fn auth_attack(py: Python<'_>, m: usize, s: usize, attack: &str, trials: usize, seed: u64) -> PyResult<(f64, f64)> {
    let attack: Attack = serde_json::from_value(Value::String(attack.into()))
        .map_err(|_| PyValueError::new_err(format!("unknown attack `{attack}`")))?;
    py.detach(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores = (0..trials)
            .map(|_| qauth::attack_trial(m, s, attack, &mut rng).map(|x| x.score()))
            .collect::<anonq::Result<Vec<f64>>>()?;
        Ok(harness::stats::mean_and_sem(&scores))
    })
    .map_err(py_err)
}

#[pymodule]
fn anonq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(strategies, m)?)?;
    m.add_function(wrap_pyfunction!(anonymity_strategy_names, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(batch, m)?)?;
    m.add_function(wrap_pyfunction!(anonymity_test, m)?)?;
    m.add_function(wrap_pyfunction!(exact_anonymity, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_audit, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(replay_text, m)?)?;
    m.add_function(wrap_pyfunction!(security_bound, m)?)?;
    m.add_function(wrap_pyfunction!(auth_attack, m)?)?;
    Ok(())
}
