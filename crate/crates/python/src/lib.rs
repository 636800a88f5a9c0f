//! Python bindings. Values cross the boundary as decimal strings (exact to
//! the requested digits) or as JSON text; `float` views are for plotting.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use ladder_core::asymptotics::{expansion_coefficients, AsymptoticModel, Which};
use ladder_core::error::Error;
use ladder_core::output;
use ladder_core::pipeline::{self, policy_for};
use ladder_core::precision::format_real;
use ladder_core::residual::ResidualReport;
use ladder_core::verify::{verify_point, Suite, VerifyOptions};
use ladder_core::weight;

fn py_err(e: Error) -> PyErr {
    if e.is_numeric() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn json(value: &serde_json::Value) -> String {
    value.to_string()
}

/// Weight parameters together with the degree and digit budget.
#[pyclass(frozen)]
struct Parameters {
    inner: weight::Parameters,
    #[pyo3(get)]
    n_max: usize,
}

#[pymethods]
impl Parameters {
    #[new]
    #[pyo3(signature = (lam, t, n_max = 50, digits = 30))]
    fn new(lam: &str, t: &str, n_max: usize, digits: u32) -> PyResult<Self> {
        let policy = policy_for(n_max, digits).map_err(py_err)?;
        let inner = weight::Parameters::parse(lam, t, policy).map_err(py_err)?;
        Ok(Parameters { inner, n_max })
    }

    #[getter]
    fn lam(&self) -> String {
        self.inner.lambda_text.clone()
    }

    #[getter]
    fn t(&self) -> String {
        self.inner.t_text.clone()
    }

    #[getter]
    fn digits(&self) -> u32 {
        self.inner.policy.target_digits
    }

    #[getter]
    fn precision_bits(&self) -> u32 {
        self.inner.prec()
    }

    /// `[mu_k_min, ..., mu_k_max]` as decimal strings; needs `k_min <= -2`.
    #[pyo3(signature = (k_min = -2, k_max = 10))]
    fn moments(&self, k_min: i64, k_max: i64) -> PyResult<Vec<String>> {
        let table = weight::compute_moments(&self.inner, k_min, k_max).map_err(py_err)?;
        (k_min..=k_max)
            .map(|k| Ok(format_real(table.mu(k).map_err(py_err)?, self.digits())))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Parameters(lam='{}', t='{}', n_max={}, digits={})",
            self.lam(),
            self.t(),
            self.n_max,
            self.digits()
        )
    }
}

/// Recurrence and ladder tables for `0 <= n <= n_max`.
#[pyclass(frozen)]
struct Run {
    inner: pipeline::Run,
}

impl Run {
    fn column(&self, name: &str) -> PyResult<&[ladder_core::precision::Real]> {
        let rec = &self.inner.recurrence;
        let ladder = &self.inner.ladder;
        let n = self.inner.n_max + 1;
        Ok(match name {
            "alpha" => &rec.alpha[..n],
            "beta" => &rec.beta[..n],
            "h" => &rec.h[..n],
            "p" => &rec.p[..n],
            "R" => &ladder.big_r[..n],
            "r" => &ladder.small_r[..n],
            other => return Err(PyValueError::new_err(format!("unknown column '{other}'"))),
        })
    }
}

#[pymethods]
impl Run {
    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max
    }

    /// One of `alpha, beta, h, p, R, r` as decimal strings.
    fn values(&self, name: &str) -> PyResult<Vec<String>> {
        let digits = self.inner.policy().target_digits;
        Ok(self.column(name)?.iter().map(|x| format_real(x, digits)).collect())
    }

    /// The same column rounded to double precision.
    fn floats(&self, name: &str) -> PyResult<Vec<f64>> {
        Ok(self.column(name)?.iter().map(|x| x.to_f64()).collect())
    }

    fn to_csv(&self) -> String {
        output::table_csv(&self.inner)
    }

    fn to_json(&self) -> String {
        json(&output::table_json(&self.inner))
    }
}

/// Outcome of `verify`.
#[pyclass(frozen)]
struct Report {
    inner: ResidualReport,
}

#[pymethods]
impl Report {
    #[getter]
    fn passed(&self) -> bool {
        self.inner.passed()
    }

    fn __len__(&self) -> usize {
        self.inner.entries.len()
    }

    /// `(identity, n, residual)` for every failing entry.
    fn failures(&self) -> Vec<(String, usize, f64)> {
        self.inner
            .failures()
            .map(|e| (e.identity.clone(), e.n, e.residual.to_f64()))
            .collect()
    }

    /// `(identity, count, failures, max_residual)` per identity.
    fn summary(&self) -> Vec<(String, usize, usize, f64)> {
        self.inner
            .summary()
            .into_iter()
            .map(|s| (s.identity, s.count, s.failures, s.max_residual.to_f64()))
            .collect()
    }

    fn to_json(&self) -> String {
        json(&self.inner.to_json())
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

/// Large-`n` expansions of `alpha_n` and `beta_n`.
#[pyclass(frozen)]
struct Asymptotics {
    inner: AsymptoticModel,
    digits: u32,
}

fn which(name: &str) -> PyResult<Which> {
    match name {
        "alpha" => Ok(Which::Alpha),
        "beta" => Ok(Which::Beta),
        other => Err(PyValueError::new_err(format!("expected 'alpha' or 'beta', got '{other}'"))),
    }
}

#[pymethods]
impl Asymptotics {
    /// `a_j` for `0 <= j <= 4`.
    fn a(&self, j: usize) -> PyResult<String> {
        if j > 4 {
            return Err(PyValueError::new_err("a_j is available for 0 <= j <= 4"));
        }
        Ok(format_real(self.inner.a(j), self.digits))
    }

    /// `b_j` for `-1 <= j <= 3`.
    fn b(&self, j: i32) -> PyResult<String> {
        if !(-1..=3).contains(&j) {
            return Err(PyValueError::new_err("b_j is available for -1 <= j <= 3"));
        }
        Ok(format_real(self.inner.b(j), self.digits))
    }

    fn expansion(&self, n: usize, kind: &str) -> PyResult<String> {
        let value = self.inner.expansion_value(n, which(kind)?).map_err(py_err)?;
        Ok(format_real(&value, self.digits))
    }

    fn to_json(&self) -> String {
        json(&self.inner.to_json(self.digits))
    }
}

/// Moments, Cholesky factorization and ladder functions.
#[pyfunction]
fn compute(py: Python<'_>, params: &Parameters) -> PyResult<Run> {
    let inner = py
        .detach(|| pipeline::run(&params.inner, params.n_max))
        .map_err(py_err)?;
    Ok(Run { inner })
}

/// Runs the named suites (default: every suite except `asym`).
#[pyfunction]
#[pyo3(signature = (params, suites = None))]
fn verify(py: Python<'_>, params: &Parameters, suites: Option<Vec<String>>) -> PyResult<Report> {
    let suites = match suites {
        Some(names) => names
            .iter()
            .map(|s| s.parse::<Suite>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?,
        None => Suite::defaults(),
    };
    let options = VerifyOptions {
        suites,
        ..VerifyOptions::default()
    };
    let v = py
        .detach(|| verify_point(&params.inner, params.n_max, &options))
        .map_err(py_err)?;
    Ok(Report { inner: v.report })
}

#[pyfunction]
fn asymptotics(params: &Parameters) -> PyResult<Asymptotics> {
    let inner = expansion_coefficients(&params.inner.lambda, &params.inner.t).map_err(py_err)?;
    Ok(Asymptotics {
        inner,
        digits: params.inner.policy.target_digits,
    })
}

#[pymodule]
fn laguerre_ladder(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Parameters>()?;
    m.add_class::<Run>()?;
    m.add_class::<Report>()?;
    m.add_class::<Asymptotics>()?;
    m.add_function(wrap_pyfunction!(compute, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotics, m)?)?;
    Ok(())
}
