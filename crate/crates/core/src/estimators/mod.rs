//! Monte Carlo estimation of norms and compatibilities from prior and
//! posterior draws, and the samplers that produce those draws.
//!
//! Every expectation is accumulated as a log-sum-exp, so estimators stay
//! finite when densities or likelihoods are far outside double range.

mod evidence;
mod io;
mod mc;
mod sampling;

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conjugate::{BetaBernoulliModel, ConjugateError};
use crate::numerics::{ln_beta, log_binomial};

pub use evidence::{importance_log_integral, LogEvidence};
pub use io::{read_draws_csv, read_draws_csv_path, write_draws_csv, write_draws_csv_path};
pub use mc::{
    kappa_pi1_pi2_mc, kappa_pp_harmonic, kappa_pp_stable, mc_estimate, postmean_suite, McEstimate,
    PostMeanTarget, RunningTrace, BATCHES, LOW_ESS,
};
pub use sampling::{rw_metropolis, sample_direct_beta, Block, McmcConfig, MhOutput};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("no {0} draws available")]
    EmptyDraws(&'static str),
    #[error("{0}")]
    Domain(String),
    #[error("log target is not finite at the initial point {0:?}")]
    NonFiniteInit(Vec<f64>),
    #[error("{0}")]
    Io(String),
}

impl From<ConjugateError> for EstimatorError {
    fn from(e: ConjugateError) -> Self {
        EstimatorError::Domain(e.to_string())
    }
}

/// Stream numbers used to derive independent generators from one seed.
pub mod streams {
    pub const POSTERIOR: u64 = 1;
    pub const PRIOR: u64 = 2;
    pub const ALT_PRIOR: u64 = 3;
    /// First stream for per-cell importance samplers.
    pub const EVIDENCE_BASE: u64 = 1 << 40;
    /// First stream for per-cell chains in grid computations.
    pub const CELL_BASE: u64 = 1 << 16;
}

/// Generator for stream `stream` of `seed`. Different streams of the same
/// seed are independent; the mapping is fixed across platforms.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `θ ↦ ln f(θ)`; `-inf` where `f` vanishes.
pub type LogDensity = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    Direct,
    RwMetropolis,
    Imported,
}

impl SamplingMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplingMethod::Direct => "direct",
            SamplingMethod::RwMetropolis => "rw_metropolis",
            SamplingMethod::Imported => "imported",
        }
    }
}

/// Draws from a second prior `π₂`, for prior–prior compatibility.
#[derive(Clone)]
pub struct AltPrior {
    pub draws: Vec<Vec<f64>>,
    pub log_density: LogDensity,
}

/// Posterior and prior draws with the log-prior and log-likelihood
/// evaluators the estimators need.
#[derive(Clone)]
pub struct SampleBatch {
    pub posterior_draws: Vec<Vec<f64>>,
    pub prior_draws: Vec<Vec<f64>>,
    pub log_prior: LogDensity,
    pub log_lik: LogDensity,
    pub seed: u64,
    pub method: SamplingMethod,
    pub alt_prior: Option<AltPrior>,
    /// Replaces `log_lik` at prior draws. Must be a conditional expectation
    /// of `ℓ` under the prior given the components it reads, so that its
    /// prior mean is still `E_π ℓ`.
    pub prior_lik: Option<LogDensity>,
    /// `ln ∫_Π ℓ²` when known. Enables a second estimator of `E_p[ℓ/π]`.
    pub log_lik_sq_integral: Option<f64>,
    /// An independent estimate of `E_π ℓ`, used in place of the prior-draw
    /// average when its effective sample size is larger.
    pub log_evidence: Option<LogEvidence>,
}

impl fmt::Debug for SampleBatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampleBatch")
            .field("posterior_draws", &self.posterior_draws.len())
            .field("prior_draws", &self.prior_draws.len())
            .field("alt_prior_draws", &self.alt_prior.as_ref().map(|a| a.draws.len()))
            .field("seed", &self.seed)
            .field("method", &self.method)
            .field("log_lik_sq_integral", &self.log_lik_sq_integral)
            .field("log_evidence", &self.log_evidence)
            .finish()
    }
}

/// `ln Beta(θ; a, b)`, `-inf` outside (0, 1).
pub fn beta_log_density(a: f64, b: f64) -> LogDensity {
    let log_norm = ln_beta(a, b);
    Arc::new(move |x: &[f64]| {
        let t = x[0];
        if t <= 0.0 || t >= 1.0 {
            return f64::NEG_INFINITY;
        }
        (a - 1.0) * t.ln() + (b - 1.0) * (-t).ln_1p() - log_norm
    })
}

/// Binomial likelihood `C(n, n1) θ^{n1} (1 − θ)^{n − n1}` on (0, 1).
pub fn bernoulli_log_lik(n: u64, n1: u64) -> LogDensity {
    let log_c = log_binomial(n, n1).unwrap_or(f64::NAN);
    let (k, m) = (n1 as f64, (n - n1.min(n)) as f64);
    Arc::new(move |x: &[f64]| {
        let t = x[0];
        if !(0.0..=1.0).contains(&t) {
            return f64::NEG_INFINITY;
        }
        let mut v = log_c;
        if k > 0.0 {
            v += k * t.ln();
        }
        if m > 0.0 {
            v += m * (-t).ln_1p();
        }
        v
    })
}

fn as_rows(xs: Vec<f64>) -> Vec<Vec<f64>> {
    xs.into_iter().map(|x| vec![x]).collect()
}

/// Direct draws for the Beta–Bernoulli model: posterior draws from
/// `Beta(a*, b*)` and an independent stream of prior draws from `Beta(a, b)`.
pub fn beta_bernoulli_batch(
    m: &BetaBernoulliModel,
    posterior_count: usize,
    prior_count: usize,
    seed: u64,
) -> Result<SampleBatch, EstimatorError> {
    m.validate()?;
    let post = sample_direct_beta(m.a_post(), m.b_post(), posterior_count, seed, streams::POSTERIOR)?;
    let prior = sample_direct_beta(m.a, m.b, prior_count, seed, streams::PRIOR)?;
    Ok(SampleBatch {
        posterior_draws: as_rows(post),
        prior_draws: as_rows(prior),
        log_prior: beta_log_density(m.a, m.b),
        log_lik: bernoulli_log_lik(m.n, m.n1),
        seed,
        method: SamplingMethod::Direct,
        alt_prior: None,
        prior_lik: None,
        log_lik_sq_integral: None,
        log_evidence: None,
    })
}

/// Adds direct draws from a second Beta prior to a batch.
pub fn with_beta_alt_prior(mut s: SampleBatch, a2: f64, b2: f64, count: usize) -> Result<SampleBatch, EstimatorError> {
    let draws = sample_direct_beta(a2, b2, count, s.seed, streams::ALT_PRIOR)?;
    s.alt_prior = Some(AltPrior { draws: as_rows(draws), log_density: beta_log_density(a2, b2) });
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, 1).random()).collect();
        let mut r1 = stream_rng(7, 1);
        let mut r2 = stream_rng(7, 2);
        let b: Vec<u64> = (0..4).map(|_| r1.random()).collect();
        let c: Vec<u64> = (0..4).map(|_| r2.random()).collect();
        assert_eq!(a[0], b[0]);
        assert_ne!(b, c);
    }

    #[test]
    fn bernoulli_likelihood_values() {
        let l = bernoulli_log_lik(10, 2);
        let want = 45f64.ln() + 2.0 * 0.3f64.ln() + 8.0 * 0.7f64.ln();
        assert!((l(&[0.3]) - want).abs() < 1e-13);
        assert_eq!(bernoulli_log_lik(0, 0)(&[0.4]), 0.0);
        assert_eq!(l(&[1.5]), f64::NEG_INFINITY);
        assert_eq!(bernoulli_log_lik(3, 0)(&[0.0]), 0.0);
    }
}
