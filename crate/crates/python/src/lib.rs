//! Python bindings: experiment config, the five experiment commands, trained
//! generators, importance fitting and the discrete bound checks.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gandi::adversarial::Generator;
use gandi::analysis::{self, DiscreteInstance};
use gandi::harness::{self, ExperimentConfig};
use gandi::importance::{self, FitConfig, Label, LabeledSample, NetworkConfig, TabularConfig};
use gandi::resampler::BootstrapPlan;
use gandi::{BoxBounds, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_) | Error::Dimension(_) | Error::EmptyInput(_) | Error::Precondition(_) | Error::Format(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Experiment configuration built from `key = value` text.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::parse(text).map_err(py_err)? })
    }

    /// Sets one key and re-validates the whole config.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.set(key, value).map_err(py_err)?;
        next.validate().map_err(py_err)?;
        self.inner = next;
        Ok(())
    }

    fn canonical_text(&self) -> String {
        self.inner.canonical_text()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }
}

/// Returns `(attempts, solved, on_target, off_target)`.
#[pyfunction]
fn collect(config: &PyConfig, out: PathBuf) -> PyResult<(usize, usize, usize, usize)> {
    let s = harness::cmd_collect(&config.inner, &out).map_err(py_err)?;
    Ok((s.attempts, s.solved, s.on_target, s.off_target))
}

/// Returns `(method, episodes, selected_epoch, model_path)` per trained model.
#[pyfunction]
#[pyo3(signature = (config, data, out = None))]
fn train(config: &PyConfig, data: PathBuf, out: Option<PathBuf>) -> PyResult<Vec<(String, usize, usize, PathBuf)>> {
    let out = out.unwrap_or_else(|| data.clone());
    let rows = harness::cmd_train(&config.inner, &data, &out).map_err(py_err)?;
    Ok(rows.into_iter().map(|s| (s.method.tag().to_string(), s.episodes, s.selected_epoch, s.model_path)).collect())
}

/// Returns `(sampler, episodes, successes, trials, rate, ci_low, ci_high)` rows.
#[pyfunction]
#[pyo3(signature = (config, models, out = None))]
#[allow(clippy::type_complexity)]
fn evaluate(
    config: &PyConfig,
    models: PathBuf,
    out: Option<PathBuf>,
) -> PyResult<Vec<(String, usize, usize, usize, f64, f64, f64)>> {
    let out = out.unwrap_or_else(|| models.clone());
    let rows = harness::cmd_eval(&config.inner, &models, &out).map_err(py_err)?;
    Ok(rows
        .into_iter()
        .map(|r| {
            let s = r.stats;
            (r.sampler.tag().to_string(), r.episodes, s.successes, s.trials, s.rate, s.ci_low, s.ci_high)
        })
        .collect())
}

/// Returns `(rows, rejected, violations)`.
#[pyfunction]
fn verify(config: &PyConfig, out: PathBuf) -> PyResult<(usize, usize, usize)> {
    let s = harness::cmd_verify(&config.inner, &out).map_err(py_err)?;
    Ok((s.rows.len() + s.lemma_errors.len(), s.rejected, s.violations))
}

/// Returns `(spearman, tv_raw, tv_bootstrap, near_center, near_left, near_right)`.
#[pyfunction]
fn toy(config: &PyConfig, out: PathBuf) -> PyResult<(f64, f64, f64, f64, f64, f64)> {
    let s = harness::cmd_toy(&config.inner, &out).map_err(py_err)?;
    Ok((s.spearman, s.tv_raw, s.tv_bootstrap, s.near_center, s.near_left, s.near_right))
}

/// A trained conditional generator.
#[pyclass(name = "Generator", frozen)]
struct PyGenerator {
    inner: Generator,
    rng: std::sync::Mutex<ChaCha8Rng>,
}

#[pymethods]
impl PyGenerator {
    #[staticmethod]
    #[pyo3(signature = (path, seed = 0))]
    fn load(path: PathBuf, seed: u64) -> PyResult<Self> {
        let inner = Generator::load(path).map_err(py_err)?;
        Ok(Self { inner, rng: std::sync::Mutex::new(ChaCha8Rng::seed_from_u64(seed)) })
    }

    #[getter]
    fn context_dim(&self) -> usize {
        self.inner.context_dim()
    }

    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.action_dim()
    }

    /// Draws one action; returns `(action, clamped)`.
    fn sample(&self, context: Vec<f64>) -> PyResult<(Vec<f64>, bool)> {
        let mut rng = self.rng.lock().map_err(|_| PyRuntimeError::new_err("generator rng poisoned"))?;
        let s = self.inner.sample_action(&context, &mut *rng).map_err(py_err)?;
        Ok((s.action, s.clamped))
    }

    fn clamp_rate(&self, contexts: Vec<Vec<f64>>, n: usize) -> PyResult<f64> {
        let mut rng = self.rng.lock().map_err(|_| PyRuntimeError::new_err("generator rng poisoned"))?;
        self.inner.clamp_rate(&contexts, n, &mut *rng).map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }
}

/// Fitted importance-weight model over `(context, action)` pairs.
#[pyclass(name = "ImportanceModel", frozen)]
struct PyImportance {
    inner: importance::ImportanceModel,
}

fn labeled(points: Vec<(Vec<f64>, Vec<f64>)>, label: Label) -> Vec<LabeledSample> {
    points.into_iter().map(|(c, a)| LabeledSample::new(c, a, label)).collect()
}

#[pymethods]
impl PyImportance {
    /// Tabular fit with `bins` per dimension over the box `[lower, upper]`.
    #[staticmethod]
    fn fit_tabular(
        on_target: Vec<(Vec<f64>, Vec<f64>)>,
        off_target: Vec<(Vec<f64>, Vec<f64>)>,
        bins: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> PyResult<Self> {
        let bounds = BoxBounds::new(lower, upper).map_err(py_err)?;
        let cfg = FitConfig::Tabular(TabularConfig { bins, bounds });
        Self::fit(on_target, off_target, &cfg, 0)
    }

    /// Network fit on inputs already scaled to roughly `[-1, 1]`.
    #[staticmethod]
    #[pyo3(signature = (on_target, off_target, epochs = 200, holdout = 0.2, seed = 0))]
    fn fit_network(
        on_target: Vec<(Vec<f64>, Vec<f64>)>,
        off_target: Vec<(Vec<f64>, Vec<f64>)>,
        epochs: usize,
        holdout: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = FitConfig::Network(NetworkConfig { max_epochs: epochs, holdout, ..NetworkConfig::default() });
        Self::fit(on_target, off_target, &cfg, seed)
    }

    fn weight(&self, context: Vec<f64>, action: Vec<f64>) -> PyResult<f64> {
        self.inner.weight(&context, &action).map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }
}

impl PyImportance {
    fn fit(on: Vec<(Vec<f64>, Vec<f64>)>, off: Vec<(Vec<f64>, Vec<f64>)>, cfg: &FitConfig, seed: u64) -> PyResult<Self> {
        let (on, off) = (labeled(on, Label::OnTarget), labeled(off, Label::OffTarget));
        let inner = importance::fit_importance(&on, &off, cfg, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(py_err)?;
        Ok(Self { inner })
    }
}

/// Bootstrap probabilities for the given non-negative weights.
#[pyfunction]
fn bootstrap_probabilities(weights: Vec<f64>) -> PyResult<Vec<f64>> {
    let source = (0..weights.len()).map(|_| LabeledSample::new(vec![], vec![], Label::OffTarget)).collect();
    Ok(BootstrapPlan::from_weights(source, &weights).map_err(py_err)?.probabilities().to_vec())
}

#[pyfunction]
fn discrete_kl(p: Vec<f64>, m: Vec<f64>) -> PyResult<f64> {
    if p.len() != m.len() {
        return Err(PyValueError::new_err("p and m differ in length"));
    }
    Ok(analysis::discrete_kl(&p, &m))
}

/// Checks both divergence bounds on a finite instance. Returns
/// `(epsilon, rho, first, second)`, each bound as `(lhs, bound, holds)` or
/// `None` when its preconditions fail.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn check_bounds(
    p: Vec<f64>,
    q: Vec<f64>,
    w_hat: Vec<f64>,
) -> PyResult<(f64, f64, Option<(f64, f64, bool)>, Option<(f64, f64, bool)>)> {
    let inst = DiscreteInstance::new(p, q, w_hat).map_err(py_err)?;
    let as_tuple = |c: analysis::BoundCheck| (c.lhs, c.bound, c.holds);
    Ok((
        inst.epsilon(),
        inst.rho(),
        analysis::verify_theorem1(&inst).ok().map(as_tuple),
        analysis::verify_theorem2(&inst).ok().map(as_tuple),
    ))
}

/// Success rate with a 95% Wilson interval: `(rate, ci_low, ci_high)`.
#[pyfunction]
fn success_interval(trials: usize, successes: usize) -> PyResult<(f64, f64, f64)> {
    let s = analysis::success_stats_from_counts(trials, successes).map_err(py_err)?;
    Ok((s.rate, s.ci_low, s.ci_high))
}

#[pymodule]
fn gandi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyImportance>()?;
    m.add_function(wrap_pyfunction!(collect, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(toy, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_kl, m)?)?;
    m.add_function(wrap_pyfunction!(check_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(success_interval, m)?)?;
    Ok(())
}
