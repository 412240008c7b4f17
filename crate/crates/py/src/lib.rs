//! Python bindings. Results come back as plain dicts and lists; any core
//! error is raised as `ValueError`.

use fejer_core::applications::{lambda_moment_bound_check, means_bound_check, DensitySpec, MeanParams};
use fejer_core::battery::{default_cases, run_battery as run_cases};
use fejer_core::bounds::{
    bound_convex_left, bound_h_convex as core_bound_h, bound_h_convex_mirror, bound_s_convex as core_bound_s,
    fejer_triple,
};
use fejer_core::expr::Expression;
use fejer_core::fejer::{m_abs_integral, m_value, trapezoid_gap, verify_lemma, BoundReport, LemmaTolerances, ProblemSpec};
use fejer_core::hconvexity::check_h_convex as core_check;
use fejer_core::kernel::HKernel;
use fejer_core::quadrature::{adaptive_refine, run_quadrature, uniform_partition, Partition};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: fejer_core::error::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kernel(src: &str) -> PyResult<HKernel> {
    src.parse().map_err(err)
}

fn report<'py>(py: Python<'py>, r: &BoundReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("label", &r.label)?;
    d.set_item("measured", r.measured)?;
    d.set_item("bound", r.bound)?;
    d.set_item("slack", r.slack)?;
    d.set_item("satisfied", r.satisfied)?;
    d.set_item("warnings", &r.warnings)?;
    Ok(d)
}

/// `f`, its derivative and a weight `g` on `[a, b]`.
#[pyclass(frozen)]
struct Problem {
    inner: ProblemSpec,
}

#[pymethods]
impl Problem {
    #[new]
    #[pyo3(signature = (f, a, b, g = "1", fprime = None))]
    fn new(f: &str, a: f64, b: f64, g: &str, fprime: Option<&str>) -> PyResult<Self> {
        let inner = ProblemSpec::parse(f, fprime, g, a, b).map_err(err)?;
        Ok(Problem { inner })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    fn gap(&self) -> PyResult<f64> {
        trapezoid_gap(&self.inner).map_err(err)
    }

    fn m(&self, t: f64) -> PyResult<f64> {
        m_value(&self.inner, t).map_err(err)
    }

    fn m_abs_integral(&self) -> PyResult<f64> {
        m_abs_integral(&self.inner).map_err(err)
    }

    /// `(lower, middle, upper)` of the weighted Hermite–Hadamard chain.
    fn fejer_triple(&self) -> PyResult<(f64, f64, f64)> {
        let t = fejer_triple(&self.inner).map_err(err)?;
        Ok((t.lower, t.middle, t.upper))
    }

    #[pyo3(signature = (grid = 101))]
    fn verify_lemma<'py>(&self, py: Python<'py>, grid: usize) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let reports = verify_lemma(&self.inner, grid, &LemmaTolerances::default()).map_err(err)?;
        reports.iter().map(|r| report(py, r)).collect()
    }
}

#[pyfunction]
#[pyo3(signature = (problem, kernel_spec = "power:1", mirror = false))]
fn bound_h_convex<'py>(py: Python<'py>, problem: &Problem, kernel_spec: &str, mirror: bool) -> PyResult<Bound<'py, PyDict>> {
    let h = kernel(kernel_spec)?;
    let r = if mirror {
        bound_h_convex_mirror(&problem.inner, &h)
    } else {
        core_bound_h(&problem.inner, &h)
    };
    report(py, &r.map_err(err)?)
}

#[pyfunction]
fn bound_s_convex<'py>(py: Python<'py>, problem: &Problem, s: f64) -> PyResult<Bound<'py, PyDict>> {
    report(py, &core_bound_s(&problem.inner, s).map_err(err)?)
}

#[pyfunction]
fn bound_convex<'py>(py: Python<'py>, problem: &Problem) -> PyResult<Bound<'py, PyDict>> {
    report(py, &bound_convex_left(&problem.inner).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (a, b, n, k = 1.0))]
fn means_bound<'py>(py: Python<'py>, a: f64, b: f64, n: f64, k: f64) -> PyResult<Bound<'py, PyDict>> {
    let mp = MeanParams::new(a, b, n, k).map_err(err)?;
    report(py, &means_bound_check(&mp).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (density, a, b, lam = 1.0, kernel_spec = "power:1"))]
fn moment_bound<'py>(
    py: Python<'py>,
    density: &str,
    a: f64,
    b: f64,
    lam: f64,
    kernel_spec: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let d = DensitySpec::parse(density, a, b).map_err(err)?;
    let c = lambda_moment_bound_check(&d, lam, &kernel(kernel_spec)?).map_err(err)?;
    let out = report(py, &c.report)?;
    out.set_item("moment", c.moment)?;
    out.set_item("scaled_bound", c.scaled_bound)?;
    Ok(out)
}

/// Composite weighted trapezoid on `n` equal pieces, or on explicit `points`.
#[pyfunction]
#[pyo3(signature = (problem, n = 1, kernel_spec = "power:1", points = None))]
fn quadrature<'py>(
    py: Python<'py>,
    problem: &Problem,
    n: usize,
    kernel_spec: &str,
    points: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = &problem.inner;
    let part = match points {
        Some(pts) => Partition::new(pts),
        None => uniform_partition(p.a, p.b, n),
    }
    .map_err(err)?;
    let q = run_quadrature(p, &kernel(kernel_spec)?, &part).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("value", q.value)?;
    d.set_item("error_bound", q.error_bound)?;
    d.set_item("reference", q.reference)?;
    d.set_item("actual_error", q.actual_error)?;
    d.set_item("certified", q.certified())?;
    d.set_item("warnings", &q.warnings)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (problem, tol, kernel_spec = "power:1", max_intervals = 1024))]
fn refine<'py>(
    py: Python<'py>,
    problem: &Problem,
    tol: f64,
    kernel_spec: &str,
    max_intervals: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let r = adaptive_refine(&problem.inner, &kernel(kernel_spec)?, tol, max_intervals).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("partition", r.partition.points())?;
    d.set_item("error_bound", r.error_bound)?;
    d.set_item("converged", r.converged)?;
    d.set_item("warnings", &r.warnings)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (phi, a, b, kernel_spec = "power:1", grid = 21))]
fn check_h_convex<'py>(
    py: Python<'py>,
    phi: &str,
    a: f64,
    b: f64,
    kernel_spec: &str,
    grid: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let e = Expression::parse(phi).map_err(err)?;
    let r = core_check(|x| e.eval(x), &kernel(kernel_spec)?, a, b, grid).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("passed", r.passed())?;
    d.set_item("checked_triples", r.checked_triples)?;
    d.set_item("violation_count", r.violation_count)?;
    d.set_item("max_violation", r.max_violation)?;
    d.set_item("summary", r.summary())?;
    Ok(d)
}

/// Runs the built-in case battery; returns `(total, passed, failed names)`.
#[pyfunction]
fn run_battery(py: Python<'_>) -> (usize, usize, Vec<String>) {
    let r = py.detach(|| run_cases(&default_cases()));
    let failed = r.cases.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    (r.total, r.passed, failed)
}

#[pymodule]
fn fejer(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_function(wrap_pyfunction!(bound_h_convex, m)?)?;
    m.add_function(wrap_pyfunction!(bound_s_convex, m)?)?;
    m.add_function(wrap_pyfunction!(bound_convex, m)?)?;
    m.add_function(wrap_pyfunction!(means_bound, m)?)?;
    m.add_function(wrap_pyfunction!(moment_bound, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(refine, m)?)?;
    m.add_function(wrap_pyfunction!(check_h_convex, m)?)?;
    m.add_function(wrap_pyfunction!(run_battery, m)?)?;
    Ok(())
}
