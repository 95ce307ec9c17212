//! Python bindings. Rates are absolute (same units as the Rust API).

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use optoent_core::entanglement::{self as ent, CovarianceMatrix};
use optoent_core::formulas::{self, AnalyticInputs};
use optoent_core::model;
use optoent_core::optimize::{self, CouplingRule, DelayMode, Spacing, SweepSpec, SweepVariable};
use optoent_core::spectra::{self, MomentSet};
use optoent_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParams(_) | Error::Config(_) | Error::Domain(_) | Error::Unstable { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} `{s}`")))
}

#[pyclass(name = "SystemParams", frozen)]
struct PySystemParams {
    inner: model::SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (kappa1, kappa2, gamma, g1, g2, n_m = 0.0, n1 = 0.0, n2 = 0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(kappa1: f64, kappa2: f64, gamma: f64, g1: f64, g2: f64, n_m: f64, n1: f64, n2: f64) -> PyResult<Self> {
        model::SystemParams::new(kappa1, kappa2, gamma, g1, g2, n_m, n1, n2)
            .map(|inner| PySystemParams { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn symmetric(gamma: f64, kappa: f64, g1: f64, g2: f64) -> PyResult<Self> {
        model::SystemParams::symmetric(gamma, kappa, g1, g2)
            .map(|inner| PySystemParams { inner })
            .map_err(to_py)
    }

    fn with_g2(&self, g2: f64) -> PyResult<Self> {
        let inner = self.inner.with_g2(g2);
        inner.validate().map_err(to_py)?;
        Ok(PySystemParams { inner })
    }

    fn g2_stability_limit(&self) -> f64 {
        self.inner.g2_stability_limit()
    }

    #[getter]
    fn kappa1(&self) -> f64 {
        self.inner.kappa1
    }
    #[getter]
    fn kappa2(&self) -> f64 {
        self.inner.kappa2
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn g1(&self) -> f64 {
        self.inner.g1
    }
    #[getter]
    fn g2(&self) -> f64 {
        self.inner.g2
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SystemParams(kappa1={}, kappa2={}, gamma={}, g1={}, g2={}, n_m={}, n1={}, n2={})",
            p.kappa1, p.kappa2, p.gamma, p.g1, p.g2, p.n_m, p.n1, p.n2
        )
    }
}

#[pyclass(name = "FilterSpec", frozen)]
struct PyFilterSpec {
    inner: spectra::FilterSpec,
}

#[pymethods]
impl PyFilterSpec {
    #[new]
    #[pyo3(signature = (center, bandwidth, delay = 0.0))]
    fn new(center: f64, bandwidth: f64, delay: f64) -> PyResult<Self> {
        spectra::FilterSpec::new(center, bandwidth, delay)
            .map(|inner| PyFilterSpec { inner })
            .map_err(to_py)
    }

    fn with_delay(&self, delay: f64) -> Self {
        PyFilterSpec {
            inner: self.inner.with_delay(delay),
        }
    }

    #[getter]
    fn center(&self) -> f64 {
        self.inner.center
    }
    #[getter]
    fn bandwidth(&self) -> f64 {
        self.inner.bandwidth
    }
    #[getter]
    fn delay(&self) -> f64 {
        self.inner.delay
    }

    fn __repr__(&self) -> String {
        let f = &self.inner;
        format!("FilterSpec(center={}, bandwidth={}, delay={})", f.center, f.bandwidth, f.delay)
    }
}

fn matrix_rows(m: &nalgebra::Matrix3<Complex64>) -> Vec<Vec<Complex64>> {
    (0..3).map(|r| (0..3).map(|c| m[(r, c)]).collect()).collect()
}

#[pyfunction]
fn check_stability(p: PyRef<'_, PySystemParams>) -> String {
    model::check_stability(&p.inner).to_string()
}

#[pyfunction]
fn drift_matrix(p: PyRef<'_, PySystemParams>) -> Vec<Vec<Complex64>> {
    matrix_rows(&model::drift_matrix(&p.inner))
}

#[pyfunction]
fn drift_eigenvalues(p: PyRef<'_, PySystemParams>) -> Vec<Complex64> {
    model::drift_eigenvalues(&p.inner).to_vec()
}

/// Scattering matrix in external order `(d1, d2†, b)`.
#[pyfunction]
fn scattering(p: PyRef<'_, PySystemParams>, freq: f64) -> PyResult<Vec<Vec<Complex64>>> {
    model::scattering(&p.inner, freq)
        .map(|s| matrix_rows(&s.entries))
        .map_err(to_py)
}

fn moments_dict<'py>(py: Python<'py>, m: &MomentSet) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n1", m.n1)?;
    d.set_item("n2", m.n2)?;
    d.set_item("c12", m.c12)?;
    d.set_item("m11", m.m11)?;
    d.set_item("m22", m.m22)?;
    d.set_item("x12", m.x12)?;
    Ok(d)
}

#[pyfunction]
fn moments<'py>(
    py: Python<'py>,
    p: PyRef<'_, PySystemParams>,
    f: PyRef<'_, PyFilterSpec>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = spectra::moments(&p.inner, &f.inner).map_err(to_py)?;
    moments_dict(py, &m)
}

#[pyfunction]
fn filtered_commutators(p: PyRef<'_, PySystemParams>, f: PyRef<'_, PyFilterSpec>) -> PyResult<(f64, f64)> {
    spectra::filtered_commutators(&p.inner, &f.inner).map_err(to_py)
}

#[pyfunction]
fn correlator_modulus(p: PyRef<'_, PySystemParams>, f: PyRef<'_, PyFilterSpec>) -> PyResult<f64> {
    spectra::correlator_modulus(&p.inner, &f.inner).map_err(to_py)
}

/// `{"e_n", "nu_minus", "moments"}` for the filtered pair.
#[pyfunction]
fn entanglement<'py>(
    py: Python<'py>,
    p: PyRef<'_, PySystemParams>,
    f: PyRef<'_, PyFilterSpec>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = ent::entanglement(&p.inner, &f.inner).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("e_n", r.e_n)?;
    d.set_item("nu_minus", r.nu_minus)?;
    if let Some(m) = &r.moments {
        d.set_item("moments", moments_dict(py, m)?)?;
    }
    Ok(d)
}

/// Logarithmic negativity of a 4×4 covariance matrix ordered `(X₁, P₁, X₂, P₂)`
/// with vacuum `I/2`.
#[pyfunction]
fn log_negativity(cov: Vec<Vec<f64>>) -> PyResult<f64> {
    if cov.len() != 4 || cov.iter().any(|r| r.len() != 4) {
        return Err(PyValueError::new_err("covariance matrix must be 4x4"));
    }
    let v = CovarianceMatrix {
        entries: nalgebra::Matrix4::from_fn(|r, c| cov[r][c]),
    };
    v.check_bona_fide().map_err(to_py)?;
    ent::log_negativity(&v).map(|r| r.e_n).map_err(to_py)
}

/// `E_N` of the two-mode squeezed vacuum built through the moment map.
#[pyfunction]
fn two_mode_squeezed_e_n(r: f64) -> PyResult<f64> {
    ent::entanglement_from_moments(&MomentSet::two_mode_squeezed(r))
        .map(|e| e.e_n)
        .map_err(to_py)
}

fn inputs(kappa: f64, sigma: f64, g1: f64) -> PyResult<AnalyticInputs> {
    AnalyticInputs::new(kappa, sigma, g1).map_err(to_py)
}

#[pyfunction]
fn tau_opt(kappa: f64, sigma: f64, g1: f64, g2: f64) -> PyResult<f64> {
    Ok(formulas::tau_opt(&inputs(kappa, sigma, g1)?, g2))
}

#[pyfunction]
fn g2_opt_large_bw(kappa: f64, sigma: f64, g1: f64) -> PyResult<f64> {
    formulas::g2_opt_large_bw(&inputs(kappa, sigma, g1)?).map_err(to_py)
}

/// `(value, warnings)`.
#[pyfunction]
fn g2_opt_small_bw(kappa: f64, sigma: f64, g1: f64) -> PyResult<(f64, Vec<String>)> {
    let r = formulas::g2_opt_small_bw(&inputs(kappa, sigma, g1)?);
    Ok((r.value, r.warnings.iter().map(|w| w.to_string()).collect()))
}

#[pyfunction]
fn g2_opt_with_delay(kappa: f64, sigma: f64, g1: f64) -> PyResult<(f64, Vec<String>)> {
    let r = formulas::g2_opt_with_delay(&inputs(kappa, sigma, g1)?);
    Ok((r.value, r.warnings.iter().map(|w| w.to_string()).collect()))
}

#[pyfunction]
fn e_n_opt_with_delay(kappa: f64, sigma: f64, g1: f64) -> PyResult<(f64, Vec<String>)> {
    let r = formulas::e_n_opt_with_delay(&inputs(kappa, sigma, g1)?);
    Ok((r.value, r.warnings.iter().map(|w| w.to_string()).collect()))
}

#[pyfunction]
fn sigma_boundary(g1: f64, kappa: f64) -> f64 {
    formulas::sigma_boundary(g1, kappa)
}

#[pyfunction]
fn saturation_threshold(sigma: f64, kappa: f64) -> f64 {
    formulas::saturation_threshold(sigma, kappa)
}

#[pyfunction]
fn e_n_saturation(sigma: f64, kappa: f64) -> f64 {
    formulas::e_n_saturation(sigma, kappa)
}

#[pyfunction]
fn tau_opt_numeric(py: Python<'_>, p: PyRef<'_, PySystemParams>, f: PyRef<'_, PyFilterSpec>) -> PyResult<f64> {
    let (p, f) = (p.inner, f.inner);
    py.detach(|| optimize::tau_opt_numeric(&p, &f)).map_err(to_py)
}

/// `(g2, e_n)` maximizing `E_N`; `delay_mode` is one of zero, analytic,
/// numeric, fixed.
#[pyfunction]
#[pyo3(signature = (p, f, delay_mode = "zero"))]
fn g2_opt_numeric(
    py: Python<'_>,
    p: PyRef<'_, PySystemParams>,
    f: PyRef<'_, PyFilterSpec>,
    delay_mode: &str,
) -> PyResult<(f64, f64)> {
    let mode: DelayMode = parse("delay mode", delay_mode)?;
    let (p, f) = (p.inner, f.inner);
    py.detach(|| optimize::g2_opt_numeric(&p, &f, mode)).map_err(to_py)
}

/// One dict per point, in order. Unstable points carry `e_n = None`.
#[pyfunction]
#[pyo3(signature = (variable, lo, hi, points, p, f, delay_mode = "zero", coupling = "fixed", log = false))]
#[allow(clippy::too_many_arguments)]
fn run_sweep<'py>(
    py: Python<'py>,
    variable: &str,
    lo: f64,
    hi: f64,
    points: usize,
    p: PyRef<'_, PySystemParams>,
    f: PyRef<'_, PyFilterSpec>,
    delay_mode: &str,
    coupling: &str,
    log: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let spec = SweepSpec {
        variable: parse::<SweepVariable>("sweep variable", variable)?,
        lo,
        hi,
        points,
        spacing: if log { Spacing::Log } else { Spacing::Linear },
        params: p.inner,
        filter: f.inner,
        delay_mode: parse("delay mode", delay_mode)?,
        coupling: parse::<CouplingRule>("coupling rule", coupling)?,
    };
    let result = py.detach(|| optimize::run_sweep(&spec)).map_err(to_py)?;
    result
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("value", r.value)?;
            d.set_item("g2", r.g2)?;
            d.set_item("stability", r.stability.to_string())?;
            d.set_item("e_n", r.e_n)?;
            d.set_item("tau", r.tau)?;
            d.set_item("c12_abs", r.c12_abs)?;
            d.set_item("n1", r.n1)?;
            d.set_item("n2", r.n2)?;
            d.set_item("annotations", r.annotations.clone())?;
            d.set_item("error", r.error.clone())?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
pub fn optoent(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyFilterSpec>()?;
    m.add_function(wrap_pyfunction!(check_stability, m)?)?;
    m.add_function(wrap_pyfunction!(drift_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(drift_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(scattering, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(filtered_commutators, m)?)?;
    m.add_function(wrap_pyfunction!(correlator_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(entanglement, m)?)?;
    m.add_function(wrap_pyfunction!(log_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(two_mode_squeezed_e_n, m)?)?;
    m.add_function(wrap_pyfunction!(tau_opt, m)?)?;
    m.add_function(wrap_pyfunction!(g2_opt_large_bw, m)?)?;
    m.add_function(wrap_pyfunction!(g2_opt_small_bw, m)?)?;
    m.add_function(wrap_pyfunction!(g2_opt_with_delay, m)?)?;
    m.add_function(wrap_pyfunction!(e_n_opt_with_delay, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(saturation_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(e_n_saturation, m)?)?;
    m.add_function(wrap_pyfunction!(tau_opt_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(g2_opt_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
