//! Python bindings: `import shufflefdp_py`.

use pyo3::exceptions::{PyArithmeticError, PyOverflowError, PyValueError};
use pyo3::prelude::*;

use shufflefdp::accountant as acc;
use shufflefdp::asymptotics as asy;
use shufflefdp::lognormal::{self, BeMode, B_SHEVTSOVA};
use shufflefdp::montecarlo::{self as mc, CheckStatus};
use shufflefdp::tradeoff::{self, Gaussian};
use shufflefdp::{numerics, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Range { .. } | Error::Saturation(_) => PyOverflowError::new_err(e.to_string()),
        Error::Numerical(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for shufflefdp::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, name = "DeltaBreakdown")]
#[derive(Clone)]
struct PyDeltaBreakdown {
    mu: f64,
    term_be: f64,
    term_linear: f64,
    term_quad: f64,
    term_cubic: f64,
    term_quartic: f64,
    term_tail: f64,
    total: f64,
    validity_lhs: f64,
    validity_rhs: f64,
    valid: bool,
}

impl From<acc::DeltaBreakdown> for PyDeltaBreakdown {
    fn from(b: acc::DeltaBreakdown) -> Self {
        PyDeltaBreakdown {
            mu: b.mu,
            term_be: b.term_be,
            term_linear: b.term_linear,
            term_quad: b.term_quad,
            term_cubic: b.term_cubic,
            term_quartic: b.term_quartic,
            term_tail: b.term_tail,
            total: b.total,
            validity_lhs: b.validity_lhs,
            validity_rhs: b.validity_rhs,
            valid: b.valid,
        }
    }
}

#[pymethods]
impl PyDeltaBreakdown {
    fn terms(&self) -> [f64; 6] {
        [
            self.term_be,
            self.term_linear,
            self.term_quad,
            self.term_cubic,
            self.term_quartic,
            self.term_tail,
        ]
    }

    fn __repr__(&self) -> String {
        format!("DeltaBreakdown(total={}, mu={}, valid={})", self.total, self.mu, self.valid)
    }
}

#[pyclass(frozen, name = "PrivacyParams")]
struct PyPrivacyParams(acc::PrivacyParams);

#[pymethods]
impl PyPrivacyParams {
    #[new]
    #[pyo3(signature = (sigma, rounds, epochs = 1))]
    fn new(sigma: f64, rounds: u64, epochs: u64) -> PyResult<Self> {
        Ok(PyPrivacyParams(acc::PrivacyParams::new(sigma, rounds, epochs).py()?))
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }

    #[getter]
    fn rounds(&self) -> u64 {
        self.0.rounds
    }

    #[getter]
    fn epochs(&self) -> u64 {
        self.0.epochs
    }

    fn below_validity_threshold(&self) -> bool {
        self.0.below_validity_threshold()
    }

    fn in_impossibility_regime(&self) -> bool {
        self.0.in_impossibility_regime()
    }

    #[pyo3(signature = (b = B_SHEVTSOVA))]
    fn delta_bound(&self, b: f64) -> PyResult<PyDeltaBreakdown> {
        Ok(acc::delta_bound(&self.0, b).py()?.into())
    }

    /// Shift of the E-fold composed bound, `1 - (1 - δ)^E`.
    #[pyo3(signature = (b = B_SHEVTSOVA))]
    fn composed_shift(&self, b: f64) -> PyResult<f64> {
        let d = acc::delta_bound(&self.0, b).py()?;
        tradeoff::compose_f0_delta(d.total.min(1.0), self.0.epochs).py()
    }

    fn __repr__(&self) -> String {
        format!(
            "PrivacyParams(sigma={}, rounds={}, epochs={})",
            self.0.sigma, self.0.rounds, self.0.epochs
        )
    }
}

#[pyclass(frozen, get_all, name = "ParamSolution")]
struct PyParamSolution {
    sigma: f64,
    delta_target: f64,
    rounds: u64,
    delta_achieved: f64,
    n_min: u64,
    admissible: bool,
    breakdown: PyDeltaBreakdown,
}

#[pymethods]
impl PyParamSolution {
    fn __repr__(&self) -> String {
        format!("ParamSolution(rounds={}, n_min={}, delta_achieved={})", self.rounds, self.n_min, self.delta_achieved)
    }
}

#[pyclass(frozen, get_all, name = "GdpComparison")]
struct PyGdpComparison {
    sigma: f64,
    shuffle_mu: f64,
    poisson_mu: f64,
    ratio: f64,
    ratio_deficit: f64,
    computed_in_log_space: bool,
}

#[pyclass(frozen, get_all, name = "EmpiricalTestReport")]
struct PyEmpiricalTestReport {
    alpha_grid: Vec<f64>,
    alpha_realized: Vec<f64>,
    beta_hat_raw: Vec<f64>,
    beta_hat: Vec<f64>,
    beta_se: Vec<f64>,
    beta_hat_reweighted: Vec<f64>,
    beta_se_reweighted: Vec<f64>,
    delta_thm: Option<f64>,
    bound_valid: bool,
    seed: u64,
    replicas: usize,
}

#[pyfunction]
fn mu_of(sigma: f64, rounds: u64) -> PyResult<f64> {
    acc::mu_of(sigma, rounds).py()
}

#[pyfunction]
#[pyo3(signature = (sigma, rounds, b = B_SHEVTSOVA))]
fn delta_bound(sigma: f64, rounds: u64, b: f64) -> PyResult<PyDeltaBreakdown> {
    let p = acc::PrivacyParams::new(sigma, rounds, 1).py()?;
    Ok(acc::delta_bound(&p, b).py()?.into())
}

#[pyfunction]
#[pyo3(signature = (sigma, rounds, b = B_SHEVTSOVA))]
fn delta_two_term(sigma: f64, rounds: u64, b: f64) -> PyResult<f64> {
    acc::delta_two_term(sigma, rounds, b).py()
}

#[pyfunction]
#[pyo3(signature = (sigma, delta, b = B_SHEVTSOVA, which = "primary"))]
fn m_closed_form(sigma: f64, delta: f64, b: f64, which: &str) -> PyResult<f64> {
    let which = match which {
        "primary" => acc::MBound::Primary,
        "conditional" => acc::MBound::Conditional,
        _ => return Err(PyValueError::new_err("which must be 'primary' or 'conditional'")),
    };
    acc::m_closed_form(sigma, delta, b, which).py()
}

#[pyfunction]
#[pyo3(signature = (sigma, delta, b = B_SHEVTSOVA))]
fn solve_m_exact(py: Python<'_>, sigma: f64, delta: f64, b: f64) -> PyResult<PyParamSolution> {
    let s = py.detach(|| acc::solve_m_exact(sigma, delta, b)).py()?;
    Ok(PyParamSolution {
        sigma: s.sigma,
        delta_target: s.delta_target,
        rounds: s.rounds,
        delta_achieved: s.delta_achieved,
        n_min: s.n_min,
        admissible: s.admissible,
        breakdown: s.breakdown.into(),
    })
}

#[pyfunction]
#[pyo3(signature = (sigma, rounds, clip = acc::DEFAULT_CLIP, noise_budget = acc::DEFAULT_NOISE_BUDGET))]
fn min_dataset(sigma: f64, rounds: u64, clip: f64, noise_budget: f64) -> PyResult<u64> {
    acc::min_dataset(sigma, rounds, clip, noise_budget).py()
}

#[pyfunction]
fn max_delta_for_sigma(sigma: f64) -> PyResult<f64> {
    acc::max_delta_for_sigma(sigma).py()
}

#[pyfunction]
fn max_sigma_for_delta(delta: f64) -> PyResult<f64> {
    acc::max_sigma_for_delta(delta).py()
}

#[pyfunction]
fn std_normal_cdf(x: f64) -> f64 {
    numerics::std_normal_cdf(x)
}

#[pyfunction]
fn std_normal_cdf_inv(p: f64) -> PyResult<f64> {
    numerics::std_normal_cdf_inv(p).py()
}

#[pyfunction]
fn gdp(mu: f64, a: f64) -> PyResult<f64> {
    tradeoff::gdp(mu, a).py()
}

#[pyfunction]
fn compose_f0_delta(delta: f64, epochs: u64) -> PyResult<f64> {
    tradeoff::compose_f0_delta(delta, epochs).py()
}

/// Separation of `G_μ` from the diagonal.
#[pyfunction]
fn gdp_separation(mu: f64) -> PyResult<f64> {
    tradeoff::separation(&Gaussian::new(mu).py()?).py()
}

#[pyfunction]
fn coeff_ratio(sigma: f64) -> PyResult<PyGdpComparison> {
    let c = asy::coeff_ratio(sigma).py()?;
    Ok(PyGdpComparison {
        sigma: c.sigma,
        shuffle_mu: c.shuffle_mu,
        poisson_mu: c.poisson_mu,
        ratio: c.ratio,
        ratio_deficit: c.ratio_deficit,
        computed_in_log_space: c.computed_in_log_space,
    })
}

#[pyfunction]
fn midpoint_sigma() -> PyResult<f64> {
    asy::midpoint_sigma().py()
}

#[pyfunction]
#[pyo3(signature = (sigma, n, b = B_SHEVTSOVA, mode = "exact"))]
fn be_error_bound(sigma: f64, n: u64, b: f64, mode: &str) -> PyResult<f64> {
    let mode = match mode {
        "exact" => BeMode::Exact,
        "small_sigma" => BeMode::SmallSigma,
        "large_sigma" => BeMode::LargeSigma,
        _ => return Err(PyValueError::new_err("mode must be exact, small_sigma or large_sigma")),
    };
    lognormal::be_error_bound(sigma, n, b, mode).py()
}

/// `(u, mu2, mu3, mu4, rho3)` of the shifted lognormal.
#[pyfunction]
fn moments(sigma: f64) -> PyResult<(f64, f64, f64, f64, f64)> {
    let m = lognormal::moments(sigma).py()?;
    Ok((m.u, m.mu2, m.mu3, m.mu4, m.rho3))
}

#[pyfunction]
#[pyo3(signature = (sigma, rounds, replicas, seed, alpha_grid = None, threads = None))]
fn empirical_tradeoff(
    py: Python<'_>,
    sigma: f64,
    rounds: usize,
    replicas: usize,
    seed: u64,
    alpha_grid: Option<Vec<f64>>,
    threads: Option<usize>,
) -> PyResult<PyEmpiricalTestReport> {
    let cfg = mc::TestConfig {
        sigma,
        rounds,
        replicas,
        seed,
        alpha_grid: alpha_grid.unwrap_or_else(mc::TestConfig::decile_grid),
        threads,
    };
    let r = py.detach(|| mc::empirical_tradeoff(&cfg)).py()?;
    Ok(PyEmpiricalTestReport {
        alpha_grid: r.alpha_grid,
        alpha_realized: r.alpha_realized,
        beta_hat_raw: r.beta_hat_raw,
        beta_hat: r.beta_hat,
        beta_se: r.beta_se,
        beta_hat_reweighted: r.beta_hat_reweighted,
        beta_se_reweighted: r.beta_se_reweighted,
        delta_thm: r.delta_thm,
        bound_valid: r.bound_valid,
        seed,
        replicas,
    })
}

type CheckRow = (String, String, Option<f64>, String);

/// `[(name, status, margin, detail)]` for the four Monte Carlo checks.
#[pyfunction]
fn validate_all(
    py: Python<'_>,
    sigma: f64,
    rounds: usize,
    replicas: usize,
    seed: u64,
) -> PyResult<Vec<CheckRow>> {
    let v = py.detach(|| mc::validate_all(sigma, rounds, replicas, seed)).py()?;
    Ok(v.checks
        .into_iter()
        .map(|c| {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "fail",
                CheckStatus::NotApplicable(_) => "not_applicable",
            };
            (c.name.to_string(), status.to_string(), c.margin, c.detail)
        })
        .collect())
}

#[pymodule]
fn shufflefdp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("B_SHEVTSOVA", B_SHEVTSOVA)?;
    m.add("B_ESSEEN", lognormal::B_ESSEEN)?;
    m.add_class::<PyPrivacyParams>()?;
    m.add_class::<PyDeltaBreakdown>()?;
    m.add_class::<PyParamSolution>()?;
    m.add_class::<PyGdpComparison>()?;
    m.add_class::<PyEmpiricalTestReport>()?;
    m.add_function(wrap_pyfunction!(mu_of, m)?)?;
    m.add_function(wrap_pyfunction!(delta_bound, m)?)?;
    m.add_function(wrap_pyfunction!(delta_two_term, m)?)?;
    m.add_function(wrap_pyfunction!(m_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(solve_m_exact, m)?)?;
    m.add_function(wrap_pyfunction!(min_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(max_delta_for_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(max_sigma_for_delta, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_cdf_inv, m)?)?;
    m.add_function(wrap_pyfunction!(gdp, m)?)?;
    m.add_function(wrap_pyfunction!(compose_f0_delta, m)?)?;
    m.add_function(wrap_pyfunction!(gdp_separation, m)?)?;
    m.add_function(wrap_pyfunction!(coeff_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(midpoint_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(be_error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_tradeoff, m)?)?;
    m.add_function(wrap_pyfunction!(validate_all, m)?)?;
    Ok(())
}
