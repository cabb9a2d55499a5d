//! Python module `bayes_geom`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::bayes_geom::cli::{run, CliError, Overrides, RunConfig};
use ::bayes_geom::conjugate::{self as cj, BetaBernoulliModel, NigParams};
use ::bayes_geom::estimators::{beta_bernoulli_batch, kappa_pp_harmonic, kappa_pp_stable};
use ::bayes_geom::expfam::{ef_affine_kappa, ef_kappa, ConjugateHyper, ExpFamSpec, KappaPair};
use ::bayes_geom::geometry::{self as geo, ScalarField};
use ::bayes_geom::numerics::QuadSpec;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Numerical { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Beta(a, b) prior with n Bernoulli trials and n1 successes.
#[pyclass(name = "BetaBernoulli", frozen, from_py_object)]
#[derive(Clone)]
struct PyBetaBernoulli {
    inner: BetaBernoulliModel,
}

#[pymethods]
impl PyBetaBernoulli {
    #[new]
    fn new(a: f64, b: f64, n: u64, n1: u64) -> PyResult<Self> {
        BetaBernoulliModel::new(a, b, n, n1).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.n
    }

    #[getter]
    fn n1(&self) -> u64 {
        self.inner.n1
    }

    /// Posterior hyperparameters (a + n1, b + n - n1).
    fn posterior_params(&self) -> (f64, f64) {
        (self.inner.a_post(), self.inner.b_post())
    }

    fn prior_norm(&self) -> PyResult<f64> {
        cj::bb_prior_norm(&self.inner).map_err(value_err)
    }

    fn posterior_norm(&self) -> PyResult<f64> {
        cj::bb_posterior_norm(&self.inner).map_err(value_err)
    }

    fn likelihood_norm(&self) -> PyResult<f64> {
        cj::bb_likelihood_norm(&self.inner).map_err(value_err)
    }

    fn kappa_prior_lik(&self) -> PyResult<f64> {
        cj::bb_kappa_prior_lik(&self.inner).map_err(value_err)
    }

    fn kappa_prior_post(&self) -> PyResult<f64> {
        cj::bb_kappa_prior_post(&self.inner).map_err(value_err)
    }

    /// Same three compatibilities computed by adaptive quadrature.
    fn quadrature_kappas(&self) -> PyResult<(f64, f64, f64)> {
        let q = QuadSpec::default();
        let (p, l, post) = (self.inner.prior_field(), self.inner.likelihood_field(), self.inner.posterior_field());
        let k = |g: &ScalarField, h: &ScalarField| geo::compatibility(g, h, &q).map(|s| s.kappa).map_err(value_err);
        Ok((k(&p, &l)?, k(&p, &post)?, k(&post, &l)?))
    }

    /// Running Monte Carlo estimate of the prior–posterior compatibility as
    /// a list of (draws, estimate).
    #[pyo3(signature = (estimator, draws, seed, record_every = 100))]
    fn trace(&self, estimator: &str, draws: usize, seed: u64, record_every: usize) -> PyResult<Vec<(usize, f64)>> {
        let s = beta_bernoulli_batch(&self.inner, draws, draws, seed).map_err(value_err)?;
        let tr = match estimator {
            "stable" => kappa_pp_stable(&s, record_every),
            "harmonic" => kappa_pp_harmonic(&s, record_every),
            other => return Err(PyValueError::new_err(format!("unknown estimator '{other}'"))),
        }
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(tr.estimates)
    }

    fn __repr__(&self) -> String {
        let m = &self.inner;
        format!("BetaBernoulli(a={}, b={}, n={}, n1={})", m.a, m.b, m.n, m.n1)
    }
}

/// Normal-inverse-gamma density on (μ, σ²).
#[pyclass(name = "Nig", frozen, from_py_object)]
#[derive(Clone)]
struct PyNig {
    inner: NigParams,
}

#[pymethods]
impl PyNig {
    #[new]
    fn new(mu0: f64, eta0: f64, nu0: f64, sigma0sq: f64) -> PyResult<Self> {
        NigParams::new(mu0, eta0, nu0, sigma0sq).map(|inner| Self { inner }).map_err(value_err)
    }

    fn params(&self) -> (f64, f64, f64, f64) {
        let p = &self.inner;
        (p.mu0, p.eta0, p.nu0, p.sigma0sq)
    }

    fn norm(&self) -> PyResult<f64> {
        cj::nig_norm(&self.inner).map_err(value_err)
    }

    fn kappa(&self, other: &PyNig) -> PyResult<f64> {
        cj::nig_kappa(&self.inner, &other.inner).map_err(value_err)
    }

    /// Posterior after n observations with mean `ybar` and centred sum of squares `ss`.
    fn posterior(&self, n: u64, ybar: f64, ss: f64) -> PyResult<PyNig> {
        cj::nig_posterior(&self.inner, n, ybar, ss).map(|inner| PyNig { inner }).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("Nig(mu0={}, eta0={}, nu0={}, sigma0sq={})", p.mu0, p.eta0, p.nu0, p.sigma0sq)
    }
}

#[pyfunction]
fn kappa_prior_prior(a1: f64, b1: f64, a2: f64, b2: f64) -> PyResult<f64> {
    cj::bb_kappa_prior_prior(a1, b1, a2, b2).map_err(value_err)
}

#[pyfunction]
fn beta_affinity(a1: f64, b1: f64, a2: f64, b2: f64) -> PyResult<f64> {
    cj::beta_affinity(a1, b1, a2, b2).map_err(value_err)
}

/// Beta prior maximising the prior–likelihood compatibility.
#[pyfunction]
fn max_compatible(n: u64, n1: u64) -> PyResult<(f64, f64)> {
    cj::bb_max_compatible(n, n1).map_err(value_err)
}

/// Compatibility of two normal densities with the given means and variances.
#[pyfunction]
fn normal_kappa(m1: f64, v1: f64, m2: f64, v2: f64) -> PyResult<f64> {
    let f = |m, v| ScalarField::normal(m, v).map_err(value_err);
    geo::compatibility(&f(m1, v1)?, &f(m2, v2)?, &QuadSpec::default()).map(|s| s.kappa).map_err(value_err)
}

/// Compatibility between members of a built-in conjugate family, from
/// normalizers. `pair` is one of "prior_lik", "prior_post", "post_lik".
#[pyfunction]
#[pyo3(signature = (family, tau, n0, data, pair, affine = false, sigmasq = None))]
fn expfam_kappa(
    family: &str,
    tau: Vec<f64>,
    n0: f64,
    data: Vec<f64>,
    pair: &str,
    affine: bool,
    sigmasq: Option<f64>,
) -> PyResult<f64> {
    let spec = match (family, sigmasq) {
        ("normal-known-variance", Some(s)) => ExpFamSpec::normal_known_variance(s),
        (name, _) => ExpFamSpec::by_name(name),
    }
    .map_err(value_err)?;
    let which = KappaPair::ALL
        .into_iter()
        .find(|k| k.as_str() == pair)
        .ok_or_else(|| PyValueError::new_err(format!("unknown pair '{pair}'")))?;
    let q = QuadSpec::default();
    let h = ConjugateHyper::new(&spec, tau, n0, &q).map_err(value_err)?;
    if affine {
        ef_affine_kappa(&spec, &h, &data, which, &q)
    } else {
        ef_kappa(&spec, &h, &data, which, &q)
    }
    .map_err(value_err)
}

/// Runs a JSON configuration as the command-line tool would and returns
/// the rendered output (JSON or CSV text).
#[pyfunction]
#[pyo3(signature = (config, seed = None))]
fn run_config(config: &str, seed: Option<u64>) -> PyResult<String> {
    let cfg = RunConfig::from_json(config).map_err(cli_err)?;
    let ov = Overrides { seed, ..Overrides::default() };
    run(cfg, &ov).map(|o| o.text).map_err(cli_err)
}

#[pymodule]
fn bayes_geom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBetaBernoulli>()?;
    m.add_class::<PyNig>()?;
    m.add_function(wrap_pyfunction!(kappa_prior_prior, m)?)?;
    m.add_function(wrap_pyfunction!(beta_affinity, m)?)?;
    m.add_function(wrap_pyfunction!(max_compatible, m)?)?;
    m.add_function(wrap_pyfunction!(normal_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(expfam_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
