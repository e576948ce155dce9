//! Python bindings. Library errors surface as `ValueError`.

use std::collections::BTreeMap;

use elliptic_polylog::eisenstein::{self, EisensteinQuery, SumMode};
use elliptic_polylog::kronecker::{self, KroneckerPoint};
use elliptic_polylog::logsheaf::{self, DividedIndex, LogValuedForm};
use elliptic_polylog::polylog::{self, TorsionLabel};
use elliptic_polylog::verify::{run_suite, RunConfig, Suite};
use elliptic_polylog::{weierstrass, DiffConfig, Error, LatticeTruncation};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<SumMode> {
    mode.parse().map_err(py_err)
}

/// A point `tau` of the upper half plane.
#[pyclass(name = "ModuliPoint", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyModuliPoint(weierstrass::ModuliPoint);

#[pymethods]
impl PyModuliPoint {
    #[new]
    fn new(tau: Complex64) -> PyResult<Self> {
        weierstrass::ModuliPoint::new(tau).map(Self).map_err(py_err)
    }

    #[getter]
    fn tau(&self) -> Complex64 {
        self.0.tau()
    }

    #[getter]
    fn nome(&self) -> Complex64 {
        self.0.nome()
    }

    /// `(eta1, eta2)` with `eta1(i) = pi`.
    fn eta_periods(&self) -> PyResult<(Complex64, Complex64)> {
        let q = weierstrass::eta_periods(&self.0).map_err(py_err)?;
        Ok((q.eta1, q.eta2))
    }

    fn g_invariants(&self) -> PyResult<(Complex64, Complex64)> {
        weierstrass::g_invariants(&self.0).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let t = self.0.tau();
        format!("ModuliPoint({}{:+}j)", t.re, t.im)
    }
}

/// An element of the level-n logarithm-sheaf fiber, with coefficients on
/// the divided-power basis `[i, j]`, `i + j <= n`.
#[pyclass(name = "LogFiber", skip_from_py_object)]
#[derive(Clone)]
struct PyLogFiber(logsheaf::LogFiber);

#[pymethods]
impl PyLogFiber {
    #[new]
    fn new(level: u32) -> PyResult<Self> {
        logsheaf::LogFiber::new(level).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn basis(level: u32, i: u32, j: u32) -> PyResult<Self> {
        logsheaf::LogFiber::basis(level, i, j).map(Self).map_err(py_err)
    }

    #[getter]
    fn level(&self) -> u32 {
        self.0.level()
    }

    fn get(&self, i: u32, j: u32) -> Complex64 {
        self.0.get(DividedIndex::new(i, j))
    }

    fn set(&mut self, i: u32, j: u32, value: Complex64) -> PyResult<()> {
        self.0.set(DividedIndex::new(i, j), value).map_err(py_err)
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        self.0.add(&other.0).map(Self).map_err(py_err)
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        self.0.sub(&other.0).map(Self).map_err(py_err)
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self(logsheaf::dp_multiply(&self.0, &other.0))
    }

    fn scale(&self, s: Complex64) -> Self {
        Self(self.0.scale(s))
    }

    /// The image in level `n - 1`.
    fn transition(&self) -> PyResult<Self> {
        self.0.transition().map(Self).map_err(py_err)
    }

    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// `{(i, j): coefficient}` for the nonzero coefficients.
    fn items(&self) -> BTreeMap<(u32, u32), Complex64> {
        self.0.iter().map(|(idx, v)| ((idx.i, idx.j), v)).collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("LogFiber(level={}, nonzero={})", self.0.level(), self.0.iter().count())
    }
}

/// `{"dz": LogFiber, "dtau": LogFiber}` for a one-form.
fn one_form_dict<'py>(py: Python<'py>, form: &LogValuedForm) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    match form {
        LogValuedForm::OneForm { dz, dtau } => {
            d.set_item("dz", PyLogFiber(dz.clone()))?;
            d.set_item("dtau", PyLogFiber(dtau.clone()))?;
        }
        _ => return Err(PyValueError::new_err("expected a one-form")),
    }
    Ok(d)
}

#[pyfunction]
fn sigma(z: Complex64, tau: &PyModuliPoint) -> PyResult<Complex64> {
    weierstrass::sigma(z, &tau.0).map_err(py_err)
}

#[pyfunction]
fn zeta(z: Complex64, tau: &PyModuliPoint) -> PyResult<Complex64> {
    weierstrass::zeta_fn(z, &tau.0).map_err(py_err)
}

/// `(wp(z), wp'(z))`.
#[pyfunction]
fn wp(z: Complex64, tau: &PyModuliPoint) -> PyResult<(Complex64, Complex64)> {
    weierstrass::wp(z, &tau.0).map_err(py_err)
}

#[pyfunction]
fn theta(z: Complex64, tau: &PyModuliPoint) -> PyResult<Complex64> {
    kronecker::theta(z, &tau.0).map_err(py_err)
}

#[pyfunction]
fn jacobi_j(z: Complex64, w: Complex64, tau: &PyModuliPoint) -> PyResult<Complex64> {
    kronecker::jacobi_j(&KroneckerPoint::new(z, w, tau.0)).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (z, w, tau, step = 1e-4, richardson_levels = 2))]
fn heat_residual(z: Complex64, w: Complex64, tau: &PyModuliPoint, step: f64, richardson_levels: u32) -> PyResult<f64> {
    let cfg = DiffConfig::new(step, richardson_levels).map_err(py_err)?;
    kronecker::heat_residual(&KroneckerPoint::new(z, w, tau.0), &cfg).map_err(py_err)
}

/// Taylor coefficients `s_0^D .. s_n^D` in `w`.
#[pyfunction]
fn s_coeffs(z: Complex64, tau: &PyModuliPoint, d: u32, n: usize) -> PyResult<Vec<Complex64>> {
    let cfg = kronecker::default_s_cauchy(&tau.0);
    Ok(kronecker::s_coeffs(z, &tau.0, d, n, &cfg).map_err(py_err)?.coeffs)
}

#[pyfunction]
fn dlog_kato_siegel(z: Complex64, tau: &PyModuliPoint, d: u32) -> PyResult<Complex64> {
    kronecker::dlog_kato_siegel(z, &tau.0, d).map_err(py_err)
}

#[pyfunction]
fn distribution_residual(z: Complex64, w: Complex64, tau: &PyModuliPoint, d: u32) -> PyResult<f64> {
    kronecker::distribution_residual(&KroneckerPoint::new(z, w, tau.0), d).map_err(py_err)
}

#[pyfunction]
fn curvature_residual(n: u32, tau: &PyModuliPoint) -> PyResult<f64> {
    logsheaf::curvature_residual(n, &tau.0, &DiffConfig::default()).map_err(py_err)
}

#[pyfunction]
fn l_form<'py>(py: Python<'py>, z: Complex64, tau: &PyModuliPoint, d: u32, n: u32) -> PyResult<Bound<'py, PyDict>> {
    one_form_dict(py, &polylog::l_form(z, &tau.0, d, n).map_err(py_err)?)
}

#[pyfunction]
#[allow(non_snake_case)]
#[pyo3(name = "L_form")]
fn big_l_form<'py>(py: Python<'py>, z: Complex64, tau: &PyModuliPoint, d: u32, n: u32) -> PyResult<Bound<'py, PyDict>> {
    one_form_dict(py, &polylog::L_form(z, &tau.0, d, n).map_err(py_err)?)
}

#[pyfunction]
fn closedness_residual(z: Complex64, tau: &PyModuliPoint, d: u32, n: u32) -> PyResult<f64> {
    polylog::closedness_residual(z, &tau.0, d, n, &DiffConfig::default()).map_err(py_err)
}

fn query(a: i64, b: i64, level: i64, k: u32, tau: &PyModuliPoint, mode: &str, shell_radius: u32) -> PyResult<EisensteinQuery> {
    EisensteinQuery::new(a, b, level, k, tau.0, LatticeTruncation::eisenstein(shell_radius), parse_mode(mode)?)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (k, a, b, level, tau, mode = "lipschitz", shell_radius = 400))]
fn eisenstein_f(k: u32, a: i64, b: i64, level: i64, tau: &PyModuliPoint, mode: &str, shell_radius: u32) -> PyResult<Complex64> {
    eisenstein::eisenstein_f(&query(a, b, level, k, tau, mode, shell_radius)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (k, a, b, level, d, tau, mode = "lipschitz", shell_radius = 400))]
#[allow(clippy::too_many_arguments)]
fn eisenstein_f_tilde(
    k: u32,
    a: i64,
    b: i64,
    level: i64,
    d: u32,
    tau: &PyModuliPoint,
    mode: &str,
    shell_radius: u32,
) -> PyResult<Complex64> {
    eisenstein::eisenstein_f_tilde(&query(a, b, level, k, tau, mode, shell_radius)?, d).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (k, a, b, level, d, tau, mode = "lipschitz"))]
fn specialize_eisenstein(k: u32, a: i64, b: i64, level: i64, d: u32, tau: &PyModuliPoint, mode: &str) -> PyResult<Complex64> {
    let label = TorsionLabel::new(a, b, level, d).map_err(py_err)?;
    polylog::specialize_eisenstein(&label, &tau.0, k, &LatticeTruncation::default(), parse_mode(mode)?)
        .map_err(py_err)
}

/// Runs a verification suite and returns the JSON report as a string.
#[pyfunction]
#[pyo3(signature = (suite = "all", seed = 0, parallelism = 1, tolerances = None))]
fn verify(py: Python<'_>, suite: &str, seed: u64, parallelism: usize, tolerances: Option<BTreeMap<String, f64>>) -> PyResult<String> {
    let suite: Suite = suite.parse().map_err(py_err)?;
    let cfg = RunConfig {
        seed,
        parallelism,
        tolerance_overrides: tolerances.unwrap_or_default(),
        ..RunConfig::default()
    };
    let report = py.detach(|| run_suite(suite, &cfg)).map_err(py_err)?;
    Ok(report.to_json_string())
}

#[pymodule]
fn elpolylog(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModuliPoint>()?;
    m.add_class::<PyLogFiber>()?;
    m.add_function(wrap_pyfunction!(sigma, m)?)?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add_function(wrap_pyfunction!(wp, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(jacobi_j, m)?)?;
    m.add_function(wrap_pyfunction!(heat_residual, m)?)?;
    m.add_function(wrap_pyfunction!(s_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(dlog_kato_siegel, m)?)?;
    m.add_function(wrap_pyfunction!(distribution_residual, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_residual, m)?)?;
    m.add_function(wrap_pyfunction!(l_form, m)?)?;
    m.add_function(wrap_pyfunction!(big_l_form, m)?)?;
    m.add_function(wrap_pyfunction!(closedness_residual, m)?)?;
    m.add_function(wrap_pyfunction!(eisenstein_f, m)?)?;
    m.add_function(wrap_pyfunction!(eisenstein_f_tilde, m)?)?;
    m.add_function(wrap_pyfunction!(specialize_eisenstein, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
