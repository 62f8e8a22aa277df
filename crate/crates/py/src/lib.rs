//! Python bindings: `import cclab`.

use ::cclab::convex_sets;
use ::cclab::harness::{self, Scenario};
use ::cclab::{network, ConvexSet as CoreSet, Vector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A closed convex set in R^n; construct with one of the static methods.
#[pyclass(name = "ConvexSet", module = "cclab", frozen, from_py_object)]
#[derive(Clone)]
struct PySet {
    inner: CoreSet,
}

#[pymethods]
impl PySet {
    #[staticmethod]
    #[pyo3(name = "box")]
    fn new_box(lo: Vector, hi: Vector) -> PyResult<Self> {
        Ok(Self { inner: CoreSet::new_box(lo, hi).map_err(value_err)? })
    }

    #[staticmethod]
    fn ball(center: Vector, radius: f64) -> PyResult<Self> {
        Ok(Self { inner: CoreSet::new_ball(center, radius).map_err(value_err)? })
    }

    #[staticmethod]
    fn halfspace(a: Vector, b: f64) -> PyResult<Self> {
        Ok(Self { inner: CoreSet::new_halfspace(a, b).map_err(value_err)? })
    }

    #[staticmethod]
    fn hyperplane(a: Vector, b: f64) -> PyResult<Self> {
        Ok(Self { inner: CoreSet::new_hyperplane(a, b).map_err(value_err)? })
    }

    #[staticmethod]
    fn full_space() -> Self {
        Self { inner: CoreSet::FullSpace }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: CoreSet = serde_json::from_str(text).map_err(value_err)?;
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("sets serialize")
    }

    fn project(&self, x: Vector) -> PyResult<Vector> {
        self.inner.project(&x).map_err(value_err)
    }

    fn distance(&self, x: Vector) -> PyResult<f64> {
        self.inner.distance(&x).map_err(value_err)
    }

    #[pyo3(signature = (x, tol = convex_sets::FEAS_TOL))]
    fn contains(&self, x: Vector, tol: f64) -> PyResult<bool> {
        self.inner.contains(&x, tol).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("ConvexSet({})", self.to_json())
    }
}

fn core_sets(sets: &[PySet]) -> Vec<CoreSet> {
    sets.iter().map(|s| s.inner.clone()).collect()
}

/// Upper bound on the entrywise distance of the transition matrix from its limit.
#[pyfunction]
#[pyo3(name = "ergodicity_bound", signature = (eta, b, m, gap))]
fn py_ergodicity_bound(eta: f64, b: usize, m: usize, gap: usize) -> PyResult<f64> {
    network::ergodicity_bound(eta, b, m, gap).map_err(value_err)
}

/// Returns `(x_hat, s, epsilon, bound)` for points `points[i]` in `sets[i]`.
#[pyfunction]
#[pyo3(name = "error_bound")]
fn py_error_bound(
    sets: Vec<PySet>,
    points: Vec<Vector>,
    xbar: Vector,
    delta: f64,
) -> PyResult<(Vector, Vector, f64, f64)> {
    let r = convex_sets::error_bound(&core_sets(&sets), &points, &xbar, delta).map_err(value_err)?;
    Ok((r.x_hat, r.s, r.epsilon, r.bound))
}

/// Projection onto the intersection of `sets`.
#[pyfunction]
#[pyo3(name = "project_intersection", signature = (sets, x, tol = 1e-12))]
fn py_project_intersection(sets: Vec<PySet>, x: Vector, tol: f64) -> PyResult<Vector> {
    convex_sets::project_intersection(&core_sets(&sets), &x, tol).map_err(value_err)
}

fn parse_scenario(text: &str) -> PyResult<Scenario> {
    let scenario = Scenario::from_json(text).map_err(value_err)?;
    scenario.validate().map_err(value_err)?;
    Ok(scenario)
}

/// Runs a scenario given as JSON text and returns the run summary as a dict.
/// With `out_dir`, also writes the CSV traces and `run.json` there.
#[pyfunction]
#[pyo3(signature = (scenario_json, out_dir = None))]
fn run_scenario<'py>(
    py: Python<'py>,
    scenario_json: &str,
    out_dir: Option<std::path::PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let scenario = parse_scenario(scenario_json)?;
    let outcome = py.detach(|| harness::execute(&scenario)).map_err(value_err)?;
    if let Some(dir) = out_dir {
        harness::write_outputs(&scenario, &outcome, &dir).map_err(value_err)?;
    }
    let summary = harness::run_summary(&scenario, &outcome);
    json_to_py(py, &serde_json::to_string(&summary).expect("summary serializes"))
}

/// Runs every certificate on a scenario. Returns `(passes, [(name, status, detail)])`
/// with status one of `"pass"`, `"FAIL"`, `"skip"`.
#[pyfunction]
fn check_scenario(
    py: Python<'_>,
    scenario_json: &str,
) -> PyResult<(bool, Vec<(String, String, String)>)> {
    let scenario = parse_scenario(scenario_json)?;
    let (_, report) = py.detach(|| harness::check_scenario(&scenario)).map_err(value_err)?;
    let rows = report
        .entries
        .iter()
        .map(|e| (e.name.clone(), e.status.to_string(), e.detail.clone()))
        .collect();
    Ok((report.passes(), rows))
}

#[pymodule]
#[pyo3(name = "cclab")]
fn cclab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySet>()?;
    m.add_function(wrap_pyfunction!(py_ergodicity_bound, m)?)?;
    m.add_function(wrap_pyfunction!(py_error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(py_project_intersection, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(check_scenario, m)?)?;
    Ok(())
}
