//! Python bindings: GP fitting and simulation, Pareto utilities, center
//! estimation, and the full optimizer driven by a Python objective.

use std::sync::{Arc, Mutex};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cehi_core::config::RunConfig;
use cehi_core::driver::RunState;
use cehi_core::ensemble::{estimate_center as core_estimate_center, EnsembleSettings};
use cehi_core::kernel::KernelFamily;
use cehi_core::problems::Problem;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn kernel_by_name(name: &str) -> PyResult<KernelFamily> {
    match name {
        "matern52" => Ok(KernelFamily::Matern52),
        "squared_exponential" => Ok(KernelFamily::SquaredExponential),
        other => Err(PyValueError::new_err(format!(
            "unknown kernel '{other}', expected 'matern52' or 'squared_exponential'"
        ))),
    }
}

/// Gaussian process regression model over [0,1]^d with a constant trend.
#[pyclass(frozen)]
struct GpModel {
    inner: cehi_core::GpModel,
}

#[pymethods]
impl GpModel {
    /// Fit hyperparameters by maximum likelihood with multistart.
    #[staticmethod]
    #[pyo3(signature = (inputs, outputs, kernel="matern52", n_starts=10, seed=0))]
    fn fit(
        inputs: Vec<Vec<f64>>,
        outputs: Vec<f64>,
        kernel: &str,
        n_starts: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let family = kernel_by_name(kernel)?;
        let inner = cehi_core::GpModel::fit_with_starts(&inputs, &outputs, family, n_starts, seed)
            .map_err(err)?;
        Ok(GpModel { inner })
    }

    /// Posterior mean and standard deviation at each query point.
    fn predict(&self, xs: Vec<Vec<f64>>) -> (Vec<f64>, Vec<f64>) {
        xs.iter()
            .map(|x| {
                let (m, v) = self.inner.predict_one(x);
                (m, v.sqrt())
            })
            .unzip()
    }

    /// Joint conditional simulations at the query points; returns
    /// `n_sim` rows of length `len(xs)`.
    fn simulate(&self, xs: Vec<Vec<f64>>, n_sim: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        self.inner.simulate(&xs, n_sim, seed).map_err(err)
    }

    /// Model conditioned on one extra observation.
    fn augment(&self, x: Vec<f64>, y: f64) -> PyResult<GpModel> {
        Ok(GpModel {
            inner: self.inner.augment(&x, y).map_err(err)?,
        })
    }

    fn log_likelihood(&self) -> f64 {
        self.inner.log_likelihood()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_train(&self) -> usize {
        self.inner.n_train()
    }
}

/// Indices of the non-dominated points, in input order.
#[pyfunction]
fn non_dominated(points: Vec<Vec<f64>>) -> Vec<usize> {
    cehi_core::pareto::non_dominated(&points)
}

/// Hypervolume dominated by the front up to the reference point.
#[pyfunction]
fn hypervolume(front: Vec<Vec<f64>>, ref_point: Vec<f64>) -> f64 {
    cehi_core::pareto::hypervolume(&front, &ref_point)
}

/// Front geometry: non-dominated set, Ideal, Nadir, extreme points, and the
/// center of the front.
#[pyfunction]
fn summarize(py: Python<'_>, points: Vec<Vec<f64>>) -> PyResult<Py<PyDict>> {
    if points.is_empty() {
        return Err(PyValueError::new_err("summarize needs at least one point"));
    }
    let s = cehi_core::pareto::summarize(&points);
    let d = PyDict::new_bound(py);
    d.set_item("front", s.front)?;
    d.set_item("ideal", s.ideal)?;
    d.set_item("nadir", s.nadir)?;
    d.set_item("extreme_points", s.extreme_points)?;
    d.set_item("center", s.center)?;
    d.set_item("closest_index", s.closest_index)?;
    Ok(d.into())
}

/// Multiplicative expected improvement of `x` toward `target` under one
/// model per objective.
#[pyfunction]
fn mei(models: Vec<PyRef<GpModel>>, x: Vec<f64>, target: Vec<f64>) -> f64 {
    let ms: Vec<cehi_core::GpModel> = models.iter().map(|m| m.inner.clone()).collect();
    cehi_core::acquisition::mei(&ms, &x, &target)
}

/// Expected hypervolume improvement of `x` over `front` w.r.t. `ref_point`.
#[pyfunction]
#[pyo3(signature = (models, x, front, ref_point, mc_samples=1000, seed=0))]
fn ehi(
    models: Vec<PyRef<GpModel>>,
    x: Vec<f64>,
    front: Vec<Vec<f64>>,
    ref_point: Vec<f64>,
    mc_samples: usize,
    seed: u64,
) -> f64 {
    let ms: Vec<cehi_core::GpModel> = models.iter().map(|m| m.inner.clone()).collect();
    cehi_core::acquisition::ehi(&ms, &x, &front, &ref_point, mc_samples, seed)
}

/// Ideal, Nadir and center estimated from conditional simulations of the
/// fitted models over the observed objectives.
#[pyfunction]
#[pyo3(signature = (models, objectives, n_sim=200, sim_points=1000, pool_size=16384, seed=0))]
fn estimate_center(
    py: Python<'_>,
    models: Vec<PyRef<GpModel>>,
    objectives: Vec<Vec<f64>>,
    n_sim: usize,
    sim_points: usize,
    pool_size: usize,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let ms: Vec<cehi_core::GpModel> = models.iter().map(|m| m.inner.clone()).collect();
    let settings = EnsembleSettings {
        n_sim,
        sim_points,
        pool_size,
    };
    let est = core_estimate_center(&ms, &objectives, &settings, seed).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("center", est.center)?;
    d.set_item("ideal", est.ideal)?;
    d.set_item("nadir", est.nadir)?;
    Ok(d.into())
}

fn config_from(budget: usize, n_init: usize, seed: u64, config_toml: Option<&str>) -> PyResult<RunConfig> {
    let mut cfg = match config_toml {
        Some(s) => RunConfig::from_toml_str(s).map_err(err)?,
        None => RunConfig::default(),
    };
    cfg.budget = budget;
    cfg.n_init = n_init;
    cfg.seed = seed;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

fn state_to_dict(py: Python<'_>, st: &RunState) -> PyResult<Py<PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("inputs", st.inputs.clone())?;
    d.set_item("objectives", st.objectives.clone())?;
    d.set_item("front", st.front.clone())?;
    d.set_item("center", st.center.clone())?;
    d.set_item("ideal", st.ideal.clone())?;
    d.set_item("nadir", st.nadir.clone())?;
    d.set_item("converged_at", st.converged_at)?;
    d.set_item("phase2_step", st.phase2_step)?;
    d.set_item("phase2_fallback", st.phase2_fallback)?;
    Ok(d.into())
}

/// Run the center-targeting optimizer on a Python objective.
///
/// `objective(x: list[float]) -> list[float]` is called once per evaluation
/// with a point of `[0,1]^dim` and must return `n_obj` finite objectives.
#[pyfunction]
#[pyo3(signature = (objective, dim, n_obj, budget=60, n_init=20, seed=0, config_toml=None))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    objective: PyObject,
    dim: usize,
    n_obj: usize,
    budget: usize,
    n_init: usize,
    seed: u64,
    config_toml: Option<&str>,
) -> PyResult<Py<PyDict>> {
    let mut cfg = config_from(budget, n_init, seed, config_toml)?;
    cfg.dim = dim;
    cfg.problem = "callback".into();
    // The driver sees only finite vectors; a Python failure is stashed here
    // and re-raised after the run unwinds with a non-finite-objective error.
    let failure: Arc<Mutex<Option<PyErr>>> = Arc::new(Mutex::new(None));
    let failure_in = Arc::clone(&failure);
    let problem = Problem::new("callback", dim, n_obj, move |x: &[f64]| {
        Python::with_gil(|py| {
            let call = || -> PyResult<Vec<f64>> {
                objective.call1(py, (x.to_vec(),))?.extract::<Vec<f64>>(py)
            };
            match call() {
                Ok(y) => y,
                Err(e) => {
                    *failure_in.lock().unwrap() = Some(e);
                    vec![f64::NAN; n_obj]
                }
            }
        })
    });
    let result = py.allow_threads(|| cehi_core::run(&problem, &cfg));
    if let Some(e) = failure.lock().unwrap().take() {
        return Err(e);
    }
    let st = result.map_err(err)?;
    state_to_dict(py, &st)
}

/// Run the optimizer on a named built-in benchmark problem.
#[pyfunction]
#[pyo3(signature = (problem, dim=4, budget=60, n_init=20, seed=0, config_toml=None))]
fn run_benchmark(
    py: Python<'_>,
    problem: &str,
    dim: usize,
    budget: usize,
    n_init: usize,
    seed: u64,
    config_toml: Option<&str>,
) -> PyResult<Py<PyDict>> {
    let mut cfg = config_from(budget, n_init, seed, config_toml)?;
    cfg.problem = problem.to_string();
    cfg.dim = dim;
    let p = cehi_core::problems::by_name(problem, dim).map_err(err)?;
    let st = py.allow_threads(|| cehi_core::run(&p, &cfg)).map_err(err)?;
    let d = state_to_dict(py, &st)?;
    if let Some(c) = p.true_center {
        d.bind(py).set_item("true_center", c)?;
    }
    Ok(d)
}

#[pymodule]
fn cehi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<GpModel>()?;
    m.add_function(wrap_pyfunction!(non_dominated, m)?)?;
    m.add_function(wrap_pyfunction!(hypervolume, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(mei, m)?)?;
    m.add_function(wrap_pyfunction!(ehi, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_center, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}
