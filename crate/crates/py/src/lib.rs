//! Python bindings: `import pycarleson`.

use carleson_lab::arithmetic::{enumerate_shell as shell, gauss_sum_raw};
use carleson_lab::bump;
use carleson_lab::lambda_sets::{self, verify_certificate};
use carleson_lab::multiplier;
use carleson_lab::operators::{self, torus, Signal};
use carleson_lab::oscillatory;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyfunction]
fn psi(t: f64) -> f64 {
    bump::psi(t)
}

#[pyfunction]
fn psi_k(k: i32, t: f64) -> f64 {
    bump::psi_k(k, t)
}

#[pyfunction]
fn chi(t: f64) -> f64 {
    bump::chi(t)
}

#[pyfunction]
fn phi_hat(xi: f64) -> f64 {
    bump::phi_hat(xi)
}

/// `S(A,B,Q) = (1/Q) Σ_r e((Ar² − Br)/Q)`.
#[pyfunction]
fn gauss_sum(a: u64, b: u64, q: u64) -> PyResult<Complex64> {
    if q == 0 {
        return Err(err("Q must be positive"));
    }
    Ok(gauss_sum_raw(a, b, q))
}

/// Triples `(A, B, Q)` of the shell `2^{s-1} ≤ Q < 2^s`.
#[pyfunction]
fn enumerate_shell(s: i32) -> PyResult<Vec<(u64, u64, u64)>> {
    Ok(shell(s).map_err(err)?.into_iter().map(|r| (r.a, r.b, r.q)).collect())
}

#[pyfunction]
#[pyo3(signature = (j, x, y, tol = 1e-10))]
fn h_j(j: i32, x: f64, y: f64, tol: f64) -> PyResult<Complex64> {
    oscillatory::h_j(j, x, y, tol).map_err(err)
}

#[pyfunction]
fn m_j(j: i32, lam: f64, beta: f64) -> PyResult<Complex64> {
    multiplier::m_j(j, lam, beta).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (j, lam, beta, epsilon = 0.1, tol = 1e-10))]
fn l_j(j: i32, lam: f64, beta: f64, epsilon: f64, tol: f64) -> PyResult<Complex64> {
    multiplier::l_j(j, lam, beta, epsilon, tol).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (j, lam, beta, epsilon = 0.1, tol = 1e-10))]
fn e_j(j: i32, lam: f64, beta: f64, epsilon: f64, tol: f64) -> PyResult<Complex64> {
    multiplier::e_j(j, lam, beta, epsilon, tol).map_err(err)
}

/// A finite modulation set.
#[pyclass(name = "LambdaSet")]
struct PyLambdaSet {
    inner: lambda_sets::LambdaSet,
}

#[pymethods]
impl PyLambdaSet {
    #[staticmethod]
    fn cantor(d: u32, depth: u32) -> PyResult<Self> {
        Ok(Self { inner: lambda_sets::LambdaSet::cantor(d, depth).map_err(err)? })
    }

    #[staticmethod]
    fn explicit(values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: lambda_sets::LambdaSet::explicit(&values).map_err(err)? })
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Covering certificate at scale `t`, verified, as a JSON string.
    fn cover(&self, t: f64) -> PyResult<String> {
        let cert = lambda_sets::cover(&self.inner, t).map_err(err)?;
        verify_certificate(&self.inner, &cert).map_err(err)?;
        Ok(cert.to_json())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Returns `(origin, samples)` of the truncated kernel applied to `f`.
#[pyfunction]
#[pyo3(signature = (samples, lam, radius, origin = 0))]
fn apply_kernel(samples: Vec<Complex64>, lam: f64, radius: usize, origin: i64) -> PyResult<(i64, Vec<Complex64>)> {
    let f = Signal::new(origin, samples).map_err(err)?;
    let out = operators::apply_kernel(&f, lam, radius).map_err(err)?;
    Ok((out.origin, out.samples))
}

/// Returns `(origin, values)` of `sup_λ |…|` over `lambdas`.
#[pyfunction]
#[pyo3(signature = (samples, lambdas, radius, origin = 0))]
fn carleson_max(samples: Vec<Complex64>, lambdas: Vec<f64>, radius: usize, origin: i64) -> PyResult<(i64, Vec<f64>)> {
    let f = Signal::new(origin, samples).map_err(err)?;
    let out = operators::carleson_max(&f, &lambdas, radius).map_err(err)?;
    Ok((out.origin, out.samples))
}

#[pyfunction]
fn bourgain_max_probe(theta: Vec<f64>, tau: f64, lambdas: Vec<f64>, f: Vec<Complex64>) -> PyResult<f64> {
    torus::bourgain_max_probe(&theta, tau, &lambdas, &f).map_err(err)
}

#[pyfunction]
fn single_l_max_probe(l: i32, lambdas: Vec<f64>, f: Vec<Complex64>) -> PyResult<f64> {
    torus::single_l_max_probe(l, &lambdas, &f).map_err(err)
}

#[pymodule]
fn pycarleson(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(psi_k, m)?)?;
    m.add_function(wrap_pyfunction!(chi, m)?)?;
    m.add_function(wrap_pyfunction!(phi_hat, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_sum, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_shell, m)?)?;
    m.add_function(wrap_pyfunction!(h_j, m)?)?;
    m.add_function(wrap_pyfunction!(m_j, m)?)?;
    m.add_function(wrap_pyfunction!(l_j, m)?)?;
    m.add_function(wrap_pyfunction!(e_j, m)?)?;
    m.add_function(wrap_pyfunction!(apply_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(carleson_max, m)?)?;
    m.add_function(wrap_pyfunction!(bourgain_max_probe, m)?)?;
    m.add_function(wrap_pyfunction!(single_l_max_probe, m)?)?;
    m.add_class::<PyLambdaSet>()?;
    Ok(())
}
