//! Closed forms for conjugate models: Beta–Bernoulli on the probability
//! scale, Normal-Inverse-Gamma for a Normal sample with unknown mean and
//! variance, and the Beta prior written on the log-odds scale.
//!
//! Every quantity is assembled from `ln B(·,·)` / `ln Γ(·)` terms and
//! exponentiated once at the end.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{FieldKind, ScalarField};
use crate::numerics::{ln_beta, ln_gamma, log_binomial, SupportRegion};

/// `ln C(n, k)` for `k ≤ n`, which every caller has already checked.
fn ln_choose(n: u64, k: u64) -> f64 {
    log_binomial(n, k).expect("k <= n checked by caller")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConjugateError {
    #[error("{0}")]
    Domain(String),
}

fn domain(msg: impl Into<String>) -> ConjugateError {
    ConjugateError::Domain(msg.into())
}

fn check_half(name: &str, v: f64) -> Result<(), ConjugateError> {
    if v > 0.5 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "{name} = {v}: Beta hyperparameters must exceed 1/2 for the prior to have a finite L2 norm"
        )))
    }
}

// ---------------------------------------------------------------------------
// Beta–Bernoulli
// ---------------------------------------------------------------------------

/// Beta(a, b) prior with `n1` successes out of `n` Bernoulli trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBernoulliModel {
    pub a: f64,
    pub b: f64,
    pub n: u64,
    pub n1: u64,
}

impl BetaBernoulliModel {
    pub fn new(a: f64, b: f64, n: u64, n1: u64) -> Result<Self, ConjugateError> {
        let m = Self { a, b, n, n1 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ConjugateError> {
        check_half("a", self.a)?;
        check_half("b", self.b)?;
        if self.n1 > self.n {
            return Err(domain(format!("n1 = {} exceeds n = {}", self.n1, self.n)));
        }
        Ok(())
    }

    /// Posterior shape `a* = n1 + a`.
    pub fn a_post(&self) -> f64 {
        self.n1 as f64 + self.a
    }

    /// Posterior shape `b* = n − n1 + b`.
    pub fn b_post(&self) -> f64 {
        (self.n - self.n1) as f64 + self.b
    }

    /// Number of failures `n − n1`.
    pub fn n0(&self) -> u64 {
        self.n - self.n1
    }

    pub fn prior_field(&self) -> ScalarField {
        ScalarField::beta(self.a, self.b).expect("validated").with_kind(FieldKind::Prior)
    }

    pub fn posterior_field(&self) -> ScalarField {
        ScalarField::beta(self.a_post(), self.b_post())
            .expect("validated")
            .with_kind(FieldKind::Posterior)
    }

    /// `θ ↦ C(n, n1) θ^{n1} (1 − θ)^{n − n1}` on (0, 1).
    pub fn likelihood_field(&self) -> ScalarField {
        let (k, m) = (self.n1 as f64, self.n0() as f64);
        let log_c = ln_choose(self.n, self.n1);
        ScalarField::unchecked(
            move |x| {
                let t = x[0];
                let mut v = log_c;
                if k > 0.0 {
                    v += k * t.ln();
                }
                if m > 0.0 {
                    v += m * (-t).ln_1p();
                }
                v
            },
            SupportRegion::unit_interval(),
            FieldKind::Likelihood,
        )
    }
}

/// `ln ‖Beta(a, b)‖ = ½ ln B(2a−1, 2b−1) − ln B(a, b)`.
fn ln_beta_norm(a: f64, b: f64) -> f64 {
    0.5 * ln_beta(2.0 * a - 1.0, 2.0 * b - 1.0) - ln_beta(a, b)
}

/// `‖π(a, b)‖` for the Beta prior.
pub fn bb_prior_norm(m: &BetaBernoulliModel) -> Result<f64, ConjugateError> {
    m.validate()?;
    Ok(ln_beta_norm(m.a, m.b).exp())
}

/// `‖p‖ = ‖π(a*, b*)‖`.
pub fn bb_posterior_norm(m: &BetaBernoulliModel) -> Result<f64, ConjugateError> {
    m.validate()?;
    Ok(ln_beta_norm(m.a_post(), m.b_post()).exp())
}

fn ln_lik_norm(m: &BetaBernoulliModel, with_binomial: bool) -> f64 {
    let c = if with_binomial { ln_choose(m.n, m.n1) } else { 0.0 };
    c + 0.5 * ln_beta(2.0 * m.n1 as f64 + 1.0, 2.0 * m.n0() as f64 + 1.0)
}

/// `‖ℓ‖ = C(n, n1) B(2n1+1, 2(n−n1)+1)^{1/2}`.
pub fn bb_likelihood_norm(m: &BetaBernoulliModel) -> Result<f64, ConjugateError> {
    if m.n1 > m.n {
        return Err(domain(format!("n1 = {} exceeds n = {}", m.n1, m.n)));
    }
    Ok(ln_lik_norm(m, true).exp())
}

/// Prior–likelihood compatibility assembled from `⟨π, ℓ⟩`, `‖π‖`, `‖ℓ‖`,
/// optionally omitting the binomial coefficient from the likelihood.
#[cfg(test)]
fn bb_kappa_prior_lik_parts(m: &BetaBernoulliModel, with_binomial: bool) -> Result<f64, ConjugateError> {
    m.validate()?;
    let c = if with_binomial { ln_choose(m.n, m.n1) } else { 0.0 };
    let ln_inner = c + ln_beta(m.a_post(), m.b_post()) - ln_beta(m.a, m.b);
    Ok((ln_inner - ln_beta_norm(m.a, m.b) - ln_lik_norm(m, with_binomial)).exp())
}

/// `κ_{π,ℓ} = B(a*, b*) / {B(2a−1, 2b−1) B(2n1+1, 2(n−n1)+1)}^{1/2}`.
pub fn bb_kappa_prior_lik(m: &BetaBernoulliModel) -> Result<f64, ConjugateError> {
    m.validate()?;
    let ln_k = ln_beta(m.a_post(), m.b_post())
        - 0.5 * ln_beta(2.0 * m.a - 1.0, 2.0 * m.b - 1.0)
        - 0.5 * ln_beta(2.0 * m.n1 as f64 + 1.0, 2.0 * m.n0() as f64 + 1.0);
    Ok(ln_k.exp())
}

/// `κ_{π,p}` between the prior and the posterior.
pub fn bb_kappa_prior_post(m: &BetaBernoulliModel) -> Result<f64, ConjugateError> {
    m.validate()?;
    bb_kappa_prior_prior(m.a, m.b, m.a_post(), m.b_post())
}

/// `κ_{π1,π2} = B(a1+a2−1, b1+b2−1) / {B(2a1−1, 2b1−1) B(2a2−1, 2b2−1)}^{1/2}`.
pub fn bb_kappa_prior_prior(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<f64, ConjugateError> {
    check_half("a1", a1)?;
    check_half("b1", b1)?;
    check_half("a2", a2)?;
    check_half("b2", b2)?;
    let ln_k = ln_beta(a1 + a2 - 1.0, b1 + b2 - 1.0)
        - 0.5 * ln_beta(2.0 * a1 - 1.0, 2.0 * b1 - 1.0)
        - 0.5 * ln_beta(2.0 * a2 - 1.0, 2.0 * b2 - 1.0);
    Ok(ln_k.exp())
}

/// The Beta prior collinear with the likelihood: `(1 + n1, 1 + n − n1)`.
pub fn bb_max_compatible(n: u64, n1: u64) -> Result<(f64, f64), ConjugateError> {
    if n1 > n {
        return Err(domain(format!("n1 = {n1} exceeds n = {n}")));
    }
    Ok((1.0 + n1 as f64, 1.0 + (n - n1) as f64))
}

// ---------------------------------------------------------------------------
// Normal-Inverse-Gamma
// ---------------------------------------------------------------------------

/// `μ | σ² ~ N(μ0, σ²/η0)`, `σ² ~ IG(ν0/2, ν0 σ0²/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigParams {
    pub mu0: f64,
    pub eta0: f64,
    pub nu0: f64,
    pub sigma0sq: f64,
}

impl NigParams {
    pub fn new(mu0: f64, eta0: f64, nu0: f64, sigma0sq: f64) -> Result<Self, ConjugateError> {
        let p = Self { mu0, eta0, nu0, sigma0sq };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConjugateError> {
        let ok = self.mu0.is_finite()
            && self.eta0 > 0.0
            && self.nu0 > 0.0
            && self.sigma0sq > 0.0
            && self.eta0.is_finite()
            && self.nu0.is_finite()
            && self.sigma0sq.is_finite();
        if ok {
            Ok(())
        } else {
            Err(domain(format!(
                "NIG({}, {}, {}, {}) requires finite mu0 and positive eta0, nu0, sigma0sq",
                self.mu0, self.eta0, self.nu0, self.sigma0sq
            )))
        }
    }

    /// Density on `(μ, σ²) ∈ ℝ × (0, ∞)` as a field.
    pub fn field(&self) -> ScalarField {
        let p = *self;
        let region = SupportRegion::new(vec![f64::NEG_INFINITY, 0.0], vec![f64::INFINITY, f64::INFINITY])
            .expect("valid region");
        ScalarField::unchecked(
            move |x| if x[1] > 0.0 { nig_ln_density(&p, x[0], x[1]) } else { f64::NEG_INFINITY },
            region,
            FieldKind::Prior,
        )
    }
}

fn nig_ln_density(p: &NigParams, mu: f64, s: f64) -> f64 {
    let half_nu = 0.5 * p.nu0;
    let rate = 0.5 * p.nu0 * p.sigma0sq;
    -0.5 * (2.0 * PI * s / p.eta0).ln() - p.eta0 * (mu - p.mu0).powi(2) / (2.0 * s) + half_nu * rate.ln()
        - ln_gamma(half_nu)
        - (half_nu + 1.0) * s.ln()
        - rate / s
}

/// `ln NIG(μ, σ² | p)`.
pub fn nig_log_density(p: &NigParams, mu: f64, sigmasq: f64) -> Result<f64, ConjugateError> {
    p.validate()?;
    if !(sigmasq > 0.0) || !mu.is_finite() {
        return Err(domain(format!("density requires finite mu and sigmasq > 0 (got {mu}, {sigmasq})")));
    }
    Ok(nig_ln_density(p, mu, sigmasq))
}

/// Parameters whose density is proportional to `f1²` (`A`), `f2²` (`B`) and
/// `f1 f2` (`C`). For any NIG kernel product, `∫ f g = f g / h` at every
/// point, where `h` is the normalized member proportional to `f g`.
fn nig_composites(p1: &NigParams, p2: &NigParams) -> Result<[NigParams; 3], ConjugateError> {
    let square = |p: &NigParams| NigParams {
        mu0: p.mu0,
        eta0: 2.0 * p.eta0,
        nu0: 2.0 * p.nu0 + 3.0,
        sigma0sq: p.nu0 * p.sigma0sq / (p.nu0 + 1.5),
    };
    let eta = p1.eta0 + p2.eta0;
    let nu = p1.nu0 + p2.nu0 + 3.0;
    let scale = p1.nu0 * p1.sigma0sq
        + p2.nu0 * p2.sigma0sq
        + p1.eta0 * p2.eta0 * (p1.mu0 - p2.mu0).powi(2) / eta;
    let c = NigParams {
        mu0: (p1.eta0 * p1.mu0 + p2.eta0 * p2.mu0) / eta,
        eta0: eta,
        nu0: nu,
        sigma0sq: scale / nu,
    };
    let out = [square(p1), square(p2), c];
    for q in &out {
        q.validate()
            .map_err(|e| domain(format!("composite NIG parameters are invalid: {e}")))?;
    }
    Ok(out)
}

/// `κ_{π1,π2} = (π_A π_B)^{1/2} / π_C` evaluated at `μ = 0, σ² = 1`.
pub fn nig_kappa(p1: &NigParams, p2: &NigParams) -> Result<f64, ConjugateError> {
    p1.validate()?;
    p2.validate()?;
    let [a, b, c] = nig_composites(p1, p2)?;
    let ln_k = 0.5 * (nig_ln_density(&a, 0.0, 1.0) + nig_ln_density(&b, 0.0, 1.0)) - nig_ln_density(&c, 0.0, 1.0);
    Ok(ln_k.exp())
}

/// `‖π‖` for a NIG density, from `π² ∝ π_A` with `A` the squared member.
pub fn nig_norm(p: &NigParams) -> Result<f64, ConjugateError> {
    p.validate()?;
    let [a, _, _] = nig_composites(p, p)?;
    Ok((nig_ln_density(p, 0.0, 1.0) - 0.5 * nig_ln_density(&a, 0.0, 1.0)).exp())
}

/// Posterior after `n` observations with mean `ybar` and centred sum of
/// squares `ss`.
pub fn nig_posterior(p: &NigParams, n: u64, ybar: f64, ss: f64) -> Result<NigParams, ConjugateError> {
    p.validate()?;
    if n == 0 {
        return Err(domain("posterior update needs n >= 1"));
    }
    if !(ss >= 0.0) || !ybar.is_finite() {
        return Err(domain(format!("need finite ybar and ss >= 0 (got {ybar}, {ss})")));
    }
    let nf = n as f64;
    let eta = p.eta0 + nf;
    let nu = p.nu0 + nf;
    let scale = p.nu0 * p.sigma0sq + ss + p.eta0 * nf / eta * (p.mu0 - ybar).powi(2);
    NigParams::new((nf * ybar + p.eta0 * p.mu0) / eta, eta, nu, scale / nu)
}

/// The NIG member proportional to the Normal likelihood in `(μ, σ²)`:
/// `NIG(ȳ, n, n − 3, ss / (n − 3))`.
pub fn nig_likelihood_as_nig(n: u64, ybar: f64, ss: f64) -> Result<NigParams, ConjugateError> {
    if n <= 3 {
        return Err(domain(format!(
            "n = {n}: the Normal likelihood in (mu, sigma^2) is square-integrable only for n > 3"
        )));
    }
    if !(ss > 0.0) {
        return Err(domain(format!("ss = {ss}: need a positive sum of squares")));
    }
    let nf = n as f64;
    NigParams::new(ybar, nf, nf - 3.0, ss / (nf - 3.0))
}

/// Log-likelihood of a Normal sample summarised by `(n, ybar, ss)`.
pub fn normal_log_likelihood(n: u64, ybar: f64, ss: f64, mu: f64, sigmasq: f64) -> f64 {
    let nf = n as f64;
    -0.5 * nf * (2.0 * PI * sigmasq).ln() - (ss + nf * (ybar - mu).powi(2)) / (2.0 * sigmasq)
}

// ---------------------------------------------------------------------------
// Beta prior on the log-odds scale
// ---------------------------------------------------------------------------

fn check_positive(name: &str, v: f64) -> Result<(), ConjugateError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} = {v} must be positive")))
    }
}

/// `ln π(η) = aη − (a+b) ln(1+eᵉ) − ln B(a, b)`, the Beta(a, b) law of
/// `θ = logistic(η)` written as a density for the log-odds `η`.
pub fn canonical_beta_log_density(a: f64, b: f64, eta: f64) -> f64 {
    a * eta - (a + b) * crate::numerics::softplus(eta) - ln_beta(a, b)
}

/// `‖π‖ = B(2a, 2b)^{1/2} / B(a, b)` on the log-odds scale; finite for all
/// `a, b > 0`.
pub fn canonical_beta_norm(a: f64, b: f64) -> Result<f64, ConjugateError> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    Ok((0.5 * ln_beta(2.0 * a, 2.0 * b) - ln_beta(a, b)).exp())
}

/// Compatibility of two log-odds Beta densities:
/// `B(a1+a2, b1+b2) / {B(2a1, 2b1) B(2a2, 2b2)}^{1/2}`.
pub fn canonical_beta_kappa(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<f64, ConjugateError> {
    for (n, v) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2)] {
        check_positive(n, v)?;
    }
    let ln_k = ln_beta(a1 + a2, b1 + b2) - 0.5 * (ln_beta(2.0 * a1, 2.0 * b1) + ln_beta(2.0 * a2, 2.0 * b2));
    Ok(ln_k.exp())
}

/// Hellinger affinity of two Beta laws:
/// `B((a1+a2)/2, (b1+b2)/2) / {B(a1, b1) B(a2, b2)}^{1/2}`. The affinity is
/// the same on every scale, in particular for θ and for the log-odds.
pub fn beta_affinity(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<f64, ConjugateError> {
    for (n, v) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2)] {
        check_positive(n, v)?;
    }
    let ln_k = ln_beta(0.5 * (a1 + a2), 0.5 * (b1 + b2)) - 0.5 * (ln_beta(a1, b1) + ln_beta(a2, b2));
    Ok(ln_k.exp())
}
