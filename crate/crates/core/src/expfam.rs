//! Conjugate exponential families `f_θ(y) = h(y) exp{η_θ·T(y) − A(η_θ)}`
//! with priors `π(θ | τ, n₀) = K(τ, n₀) exp{τ·η_θ − n₀ A(η_θ)}`.
//!
//! Norms and inner products of members reduce to ratios of normalizers
//! `K`, each computed by quadrature over Θ in log space.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{FieldKind, ScalarField};
use crate::numerics::{integrate_log, softplus, NumericsError, QuadSpec, SupportRegion, MAX_QUAD_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpFamError {
    #[error("{term} is undefined (improper member): {detail}")]
    Improper { term: String, detail: String },
    #[error("invalid family specification: {0}")]
    InvalidSpec(String),
    #[error("unknown exponential family '{0}' (known: bernoulli-canonical, normal-known-variance)")]
    UnknownFamily(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type StatFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
type CumulantFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type EtaFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HyperDomainFn = Arc<dyn Fn(&[f64], f64) -> bool + Send + Sync>;

/// A regular exponential family for scalar observations `y`, parametrized
/// by `θ ∈ theta_support` (dimension at most three).
#[derive(Clone)]
pub struct ExpFamSpec {
    pub name: String,
    /// `ln h(y)`.
    pub log_h: ScalarFn,
    /// Sufficient statistic `T(y)`, of dimension `q`.
    pub suff_stat: StatFn,
    /// Log-partition `A(η)`; `+inf` outside the natural parameter space.
    pub log_cumulant: CumulantFn,
    /// Canonical map `θ ↦ η_θ`, of dimension `q`.
    pub eta_of_theta: EtaFn,
    pub theta_support: SupportRegion,
    /// Exact properness condition on `(τ, n₀)` when it is known in closed
    /// form; otherwise properness is decided by quadrature alone.
    pub hyper_domain: Option<HyperDomainFn>,
    q: usize,
}

impl fmt::Debug for ExpFamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpFamSpec")
            .field("name", &self.name)
            .field("q", &self.q)
            .field("theta_support", &self.theta_support)
            .finish_non_exhaustive()
    }
}

impl ExpFamSpec {
    /// Assembles a family; `q` is the common dimension of `T(y)` and `η_θ`.
    pub fn new(
        name: impl Into<String>,
        q: usize,
        log_h: ScalarFn,
        suff_stat: StatFn,
        log_cumulant: CumulantFn,
        eta_of_theta: EtaFn,
        theta_support: SupportRegion,
    ) -> Result<Self, ExpFamError> {
        if theta_support.dim() > MAX_QUAD_DIM {
            return Err(ExpFamError::InvalidSpec(format!(
                "Θ has dimension {}; at most {MAX_QUAD_DIM} is supported",
                theta_support.dim()
            )));
        }
        if q == 0 {
            return Err(ExpFamError::InvalidSpec("sufficient statistic must be non-empty".into()));
        }
        Ok(Self {
            name: name.into(),
            log_h,
            suff_stat,
            log_cumulant,
            eta_of_theta,
            theta_support,
            hyper_domain: None,
            q,
        })
    }

    pub fn with_hyper_domain(mut self, domain: HyperDomainFn) -> Self {
        self.hyper_domain = Some(domain);
        self
    }

    /// Dimension of `T(y)` and `η`.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Bernoulli observations `y ∈ {0, 1}` with the log-odds `θ = η` as the
    /// parameter: `A(η) = ln(1 + eᵑ)`, `T(y) = y`. The member `(τ, n₀)` is
    /// the law of `η = logit(p)` for `p ~ Beta(τ, n₀ − τ)`, proper iff
    /// `0 < τ < n₀`.
    pub fn bernoulli_canonical() -> Self {
        Self::new(
            "bernoulli-canonical",
            1,
            Arc::new(|_| 0.0),
            Arc::new(|y| vec![y]),
            Arc::new(|eta| softplus(eta[0])),
            Arc::new(|theta| vec![theta[0]]),
            SupportRegion::real_line(),
        )
        .expect("valid built-in")
        .with_hyper_domain(Arc::new(|tau, n0| tau[0] > 0.0 && tau[0] < n0))
    }

    /// Normal observations with known variance `sigmasq`, parametrized by
    /// the mean `θ = μ`: `η = μ/σ²`, `A(η) = σ²η²/2`, `T(y) = y`. The member
    /// `(τ, n₀)` is `N(τ/n₀, σ²/n₀)`, proper iff `n₀ > 0`.
    pub fn normal_known_variance(sigmasq: f64) -> Result<Self, ExpFamError> {
        if !(sigmasq > 0.0 && sigmasq.is_finite()) {
            return Err(ExpFamError::InvalidSpec(format!("variance {sigmasq} must be positive")));
        }
        let log_norm = -0.5 * (2.0 * PI * sigmasq).ln();
        Ok(Self::new(
            "normal-known-variance",
            1,
            Arc::new(move |y| log_norm - y * y / (2.0 * sigmasq)),
            Arc::new(|y| vec![y]),
            Arc::new(move |eta| 0.5 * sigmasq * eta[0] * eta[0]),
            Arc::new(move |theta| vec![theta[0] / sigmasq]),
            SupportRegion::real_line(),
        )?
        .with_hyper_domain(Arc::new(|_, n0| n0 > 0.0)))
    }

    /// Built-in families by CLI name; the Normal family uses unit variance.
    pub fn by_name(name: &str) -> Result<Self, ExpFamError> {
        match name {
            "bernoulli-canonical" => Ok(Self::bernoulli_canonical()),
            "normal-known-variance" => Self::normal_known_variance(1.0),
            other => Err(ExpFamError::UnknownFamily(other.to_string())),
        }
    }

    /// `τ·η_θ − n₀ A(η_θ)`; `-inf` where `A` is infinite.
    pub fn log_kernel(&self, tau: &[f64], n0: f64, theta: &[f64]) -> f64 {
        let eta = (self.eta_of_theta)(theta);
        let a = (self.log_cumulant)(&eta);
        if a == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        let dot: f64 = tau.iter().zip(&eta).map(|(t, e)| t * e).sum();
        // A zero weight on A contributes nothing even where A is large.
        if n0 == 0.0 {
            dot
        } else {
            dot - n0 * a
        }
    }

    /// `(ΣT(yᵢ), n)` for a sample.
    pub fn sufficient(&self, data: &[f64]) -> Result<(Vec<f64>, f64), ExpFamError> {
        let mut s = vec![0.0; self.q];
        for &y in data {
            let t = (self.suff_stat)(y);
            if t.len() != self.q {
                return Err(ExpFamError::InvalidSpec(format!(
                    "T(y) has dimension {}, expected {}",
                    t.len(),
                    self.q
                )));
            }
            for (acc, v) in s.iter_mut().zip(t) {
                *acc += v;
            }
        }
        Ok((s, data.len() as f64))
    }
}

/// Hyperparameters `(τ, n₀)` of a proper conjugate member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateHyper {
    pub tau: Vec<f64>,
    pub n0: f64,
}

impl ConjugateHyper {
    /// Checks that `K(τ, n₀)` is finite.
    pub fn new(spec: &ExpFamSpec, tau: Vec<f64>, n0: f64, quad: &QuadSpec) -> Result<Self, ExpFamError> {
        if tau.len() != spec.q || !n0.is_finite() || tau.iter().any(|t| !t.is_finite()) {
            return Err(ExpFamError::InvalidSpec(format!(
                "hyperparameters need {} finite tau entries and finite n0",
                spec.q
            )));
        }
        let h = Self { tau, n0 };
        log_k_term(spec, &h.tau, h.n0, quad, "K(τ, n₀)")?;
        Ok(h)
    }

    /// Posterior hyperparameters `(τ + ΣT, n₀ + n)`.
    pub fn posterior(&self, spec: &ExpFamSpec, data: &[f64]) -> Result<Self, ExpFamError> {
        let (s, n) = spec.sufficient(data)?;
        Ok(Self { tau: add(&self.tau, &s, 1.0, 1.0), n0: self.n0 + n })
    }
}

fn add(x: &[f64], y: &[f64], cx: f64, cy: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| cx * a + cy * b).collect()
}

fn fmt_args(tau: &[f64], n0: f64) -> String {
    let t: Vec<String> = tau.iter().map(|v| format!("{v}")).collect();
    format!("τ = [{}], n₀ = {n0}", t.join(", "))
}

fn log_k_term(spec: &ExpFamSpec, tau: &[f64], n0: f64, quad: &QuadSpec, term: &str) -> Result<f64, ExpFamError> {
    let improper = |detail: String| ExpFamError::Improper { term: term.to_string(), detail };
    if let Some(domain) = &spec.hyper_domain {
        if !domain(tau, n0) {
            return Err(improper(format!("{} lies outside the proper range", fmt_args(tau, n0))));
        }
    }
    let r = match integrate_log(|th| spec.log_kernel(tau, n0, th), &spec.theta_support, quad) {
        Ok(r) => r,
        Err(NumericsError::NonFiniteIntegrand { .. }) => {
            return Err(improper(format!("kernel overflows at {}", fmt_args(tau, n0))))
        }
        Err(e) => return Err(e.into()),
    };
    if !r.converged || !r.log_value.is_finite() {
        return Err(improper(format!(
            "normalizing integral does not converge at {}",
            fmt_args(tau, n0)
        )));
    }
    Ok(-r.log_value)
}

/// `ln K(τ, n₀) = −ln ∫_Θ exp{τ·η_θ − n₀ A(η_θ)} dθ`.
pub fn log_k(spec: &ExpFamSpec, h: &ConjugateHyper, quad: &QuadSpec) -> Result<f64, ExpFamError> {
    log_k_term(spec, &h.tau, h.n0, quad, "K(τ, n₀)")
}

/// Which pair of vectors a compatibility compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaPair {
    PriorLik,
    PriorPost,
    PostLik,
}

impl KappaPair {
    pub const ALL: [KappaPair; 3] = [KappaPair::PriorLik, KappaPair::PriorPost, KappaPair::PostLik];

    pub fn as_str(self) -> &'static str {
        match self {
            KappaPair::PriorLik => "prior_lik",
            KappaPair::PriorPost => "prior_post",
            KappaPair::PostLik => "post_lik",
        }
    }
}

/// One `ln K` term with a weight and a label for error messages.
struct Term {
    weight: f64,
    tau: Vec<f64>,
    n0: f64,
    label: &'static str,
}

fn combine(spec: &ExpFamSpec, terms: Vec<Term>, quad: &QuadSpec) -> Result<f64, ExpFamError> {
    let mut total = 0.0;
    for t in terms {
        total += t.weight * log_k_term(spec, &t.tau, t.n0, quad, t.label)?;
    }
    Ok(total.exp())
}

fn check_hyper(spec: &ExpFamSpec, h: &ConjugateHyper) -> Result<(), ExpFamError> {
    if h.tau.len() != spec.q {
        return Err(ExpFamError::InvalidSpec(format!(
            "tau has dimension {}, expected {}",
            h.tau.len(),
            spec.q
        )));
    }
    Ok(())
}

/// Compatibility between prior, likelihood and posterior expressed through
/// normalizers, with `S = ΣT(yᵢ)`:
///
/// - prior/likelihood: `{K(2τ, 2n₀) K(2S, 2n)}^{1/2} / K(τ + S, n₀ + n)`
/// - prior/posterior: `{K(2τ, 2n₀) K(2τ + 2S, 2n₀ + 2n)}^{1/2} / K(2τ + S, 2n₀ + n)`
/// - posterior/likelihood: `{K(2τ + 2S, 2n₀ + 2n) K(2S, 2n)}^{1/2} / K(τ + 2S, n₀ + 2n)`
pub fn ef_kappa(
    spec: &ExpFamSpec,
    h: &ConjugateHyper,
    data: &[f64],
    which: KappaPair,
    quad: &QuadSpec,
) -> Result<f64, ExpFamError> {
    check_hyper(spec, h)?;
    let (s, n) = spec.sufficient(data)?;
    let (tau, n0) = (&h.tau, h.n0);
    let term = |weight, tau, n0, label| Term { weight, tau, n0, label };
    let terms = match which {
        KappaPair::PriorLik => vec![
            term(0.5, add(tau, tau, 1.0, 1.0), 2.0 * n0, "K(2τ, 2n₀)"),
            term(0.5, add(&s, &s, 1.0, 1.0), 2.0 * n, "K(2S, 2n)"),
            term(-1.0, add(tau, &s, 1.0, 1.0), n0 + n, "K(τ+S, n₀+n)"),
        ],
        KappaPair::PriorPost => vec![
            term(0.5, add(tau, tau, 1.0, 1.0), 2.0 * n0, "K(2τ, 2n₀)"),
            term(0.5, add(tau, &s, 2.0, 2.0), 2.0 * (n0 + n), "K(2τ+2S, 2n₀+2n)"),
            term(-1.0, add(tau, &s, 2.0, 1.0), 2.0 * n0 + n, "K(2τ+S, 2n₀+n)"),
        ],
        KappaPair::PostLik => vec![
            term(0.5, add(tau, &s, 2.0, 2.0), 2.0 * (n0 + n), "K(2τ+2S, 2n₀+2n)"),
            term(0.5, add(&s, &s, 1.0, 1.0), 2.0 * n, "K(2S, 2n)"),
            term(-1.0, add(tau, &s, 1.0, 2.0), n0 + 2.0 * n, "K(τ+2S, n₀+2n)"),
        ],
    };
    combine(spec, terms, quad)
}

/// Affine compatibility (between square roots) through normalizers:
///
/// - prior/likelihood: `{K(τ, n₀) K(S, n)}^{1/2} / K((τ+S)/2, (n₀+n)/2)`
/// - prior/posterior: `{K(τ, n₀) K(τ+S, n₀+n)}^{1/2} / K(τ + S/2, n₀ + n/2)`
/// - posterior/likelihood: `{K(τ+S, n₀+n) K(S, n)}^{1/2} / K(τ/2 + S, n₀/2 + n)`
pub fn ef_affine_kappa(
    spec: &ExpFamSpec,
    h: &ConjugateHyper,
    data: &[f64],
    which: KappaPair,
    quad: &QuadSpec,
) -> Result<f64, ExpFamError> {
    check_hyper(spec, h)?;
    let (s, n) = spec.sufficient(data)?;
    let (tau, n0) = (&h.tau, h.n0);
    let term = |weight, tau, n0, label| Term { weight, tau, n0, label };
    let terms = match which {
        KappaPair::PriorLik => vec![
            term(0.5, tau.clone(), n0, "K(τ, n₀)"),
            term(0.5, s.clone(), n, "K(S, n)"),
            term(-1.0, add(tau, &s, 0.5, 0.5), 0.5 * (n0 + n), "K((τ+S)/2, (n₀+n)/2)"),
        ],
        KappaPair::PriorPost => vec![
            term(0.5, tau.clone(), n0, "K(τ, n₀)"),
            term(0.5, add(tau, &s, 1.0, 1.0), n0 + n, "K(τ+S, n₀+n)"),
            term(-1.0, add(tau, &s, 1.0, 0.5), n0 + 0.5 * n, "K(τ+S/2, n₀+n/2)"),
        ],
        KappaPair::PostLik => vec![
            term(0.5, add(tau, &s, 1.0, 1.0), n0 + n, "K(τ+S, n₀+n)"),
            term(0.5, s.clone(), n, "K(S, n)"),
            term(-1.0, add(tau, &s, 0.5, 1.0), 0.5 * n0 + n, "K(τ/2+S, n₀/2+n)"),
        ],
    };
    combine(spec, terms, quad)
}

/// The member collinear with the likelihood: `(τ, n₀) = (ΣT(yᵢ), n)`.
///
/// For the Bernoulli family with `n₁` successes this is `(n₁, n)`, i.e. the
/// log-odds law of `Beta(n₁, n − n₁)`.
pub fn ef_max_compatible(spec: &ExpFamSpec, data: &[f64], quad: &QuadSpec) -> Result<ConjugateHyper, ExpFamError> {
    let (s, n) = spec.sufficient(data)?;
    if data.is_empty() && !spec.theta_support.is_bounded() {
        return Err(ExpFamError::Improper {
            term: "K(ΣT, n)".into(),
            detail: "no data: the member (0, 0) is flat over an unbounded parameter space".into(),
        });
    }
    log_k_term(spec, &s, n, quad, "K(ΣT, n)")?;
    Ok(ConjugateHyper { tau: s, n0: n })
}

/// Normalized member density `π(θ | τ, n₀)` as a field over Θ.
pub fn member_field(spec: &ExpFamSpec, h: &ConjugateHyper, quad: &QuadSpec) -> Result<ScalarField, ExpFamError> {
    check_hyper(spec, h)?;
    let lk = log_k(spec, h, quad)?;
    let spec2 = spec.clone();
    let h2 = h.clone();
    Ok(ScalarField::unchecked(
        move |th| lk + spec2.log_kernel(&h2.tau, h2.n0, th),
        spec.theta_support.clone(),
        FieldKind::Prior,
    ))
}

/// Likelihood `θ ↦ Π h(yᵢ) exp{η_θ·S − n A(η_θ)}` as a field over Θ.
pub fn likelihood_field(spec: &ExpFamSpec, data: &[f64]) -> Result<ScalarField, ExpFamError> {
    let (s, n) = spec.sufficient(data)?;
    let log_h: f64 = data.iter().map(|&y| (spec.log_h)(y)).sum();
    let spec2 = spec.clone();
    Ok(ScalarField::unchecked(
        move |th| log_h + spec2.log_kernel(&s, n, th),
        spec.theta_support.clone(),
        FieldKind::Likelihood,
    ))
}
