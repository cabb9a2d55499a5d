//! Priors, likelihoods and posteriors as vectors in L2(Θ).
//!
//! Every quantity here is computed by quadrature over the fields' supports
//! and is therefore limited to parameter spaces of dimension three or less.
//! Integrals of products are taken in log space (see
//! [`integrate_log`](crate::numerics::integrate_log)) and only combined at
//! the end, which keeps e.g. the squared norm of a peaked posterior finite.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    integrate, integrate_log, ln_beta, NumericsError, QuadSpec, SupportRegion,
};

/// Tolerance of the square-integrability probe run at construction.
const L2_PROBE_TOL: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("quadrature for {what} did not converge (best estimate {estimate:e})")]
    NotConverged { what: &'static str, estimate: f64 },
    #[error("{0} has zero norm")]
    ZeroNorm(&'static str),
    #[error("function is not square-integrable over {0}")]
    NotSquareIntegrable(String),
    #[error("region must be bounded")]
    UnboundedRegion,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("field support is not contained in the region")]
    SupportOutsideRegion,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Role of a field in Bayes' theorem; informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Prior,
    Likelihood,
    Posterior,
    Generic,
}

type LogFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A nonnegative function on a box, stored through its logarithm.
///
/// Outside `support` the field is identically zero. The log function must be
/// pure; fields are shared freely between threads.
#[derive(Clone)]
pub struct ScalarField {
    log_fn: LogFn,
    support: SupportRegion,
    kind: FieldKind,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("support", &self.support)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    /// Builds a field and checks `∫ exp(2 log_fn) < ∞` with a loose probe.
    pub fn new<F>(log_fn: F, support: SupportRegion, kind: FieldKind) -> Result<Self, GeometryError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let field = Self::unchecked(log_fn, support, kind);
        let probe = QuadSpec::with_tolerance(L2_PROBE_TOL, 0.0);
        let r = integrate_log(|x| 2.0 * field.eval_log(x), &field.support, &probe)?;
        if !r.converged || !r.log_value.is_finite() && r.log_value != f64::NEG_INFINITY {
            return Err(GeometryError::NotSquareIntegrable(format!("{:?}", field.support)));
        }
        Ok(field)
    }

    /// Builds a field without the L2 probe, for functions (typically
    /// likelihoods) that are only square-integrable on a prior's support.
    pub fn unchecked<F>(log_fn: F, support: SupportRegion, kind: FieldKind) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { log_fn: Arc::new(log_fn), support, kind }
    }

    /// Uniform density on `(lo, hi)`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        let support = SupportRegion::interval(lo, hi)?;
        let log_density = -(hi - lo).ln();
        Ok(Self::unchecked(move |_| log_density, support, FieldKind::Prior))
    }

    /// Uniform density on a bounded box.
    pub fn uniform_on(region: &SupportRegion) -> Result<Self, GeometryError> {
        if !region.is_bounded() {
            return Err(GeometryError::UnboundedRegion);
        }
        let log_density = -region.volume().ln();
        Ok(Self::unchecked(move |_| log_density, region.clone(), FieldKind::Prior))
    }

    /// Beta(a, b) density on (0, 1).
    pub fn beta(a: f64, b: f64) -> Result<Self, GeometryError> {
        if !(a > 0.0 && b > 0.0) {
            return Err(GeometryError::InvalidParameter(format!("Beta({a}, {b})")));
        }
        let log_norm = ln_beta(a, b);
        let log_fn = move |x: &[f64]| {
            let t = x[0];
            if t <= 0.0 || t >= 1.0 {
                return f64::NEG_INFINITY;
            }
            (a - 1.0) * t.ln() + (b - 1.0) * (-t).ln_1p() - log_norm
        };
        Ok(Self::unchecked(log_fn, SupportRegion::unit_interval(), FieldKind::Prior))
    }

    /// Normal(mean, var) density on the real line.
    pub fn normal(mean: f64, var: f64) -> Result<Self, GeometryError> {
        if !(var > 0.0) || !mean.is_finite() {
            return Err(GeometryError::InvalidParameter(format!("N({mean}, {var})")));
        }
        let log_norm = -0.5 * (2.0 * PI * var).ln();
        let log_fn = move |x: &[f64]| log_norm - (x[0] - mean).powi(2) / (2.0 * var);
        Ok(Self::unchecked(log_fn, SupportRegion::real_line(), FieldKind::Prior))
    }

    /// `log f(θ)`, `-inf` outside the support.
    pub fn eval_log(&self, theta: &[f64]) -> f64 {
        if !self.support.contains(theta) {
            return f64::NEG_INFINITY;
        }
        (self.log_fn)(theta)
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.eval_log(theta).exp()
    }

    pub fn support(&self) -> &SupportRegion {
        &self.support
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    /// `c · f` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = Arc::clone(&self.log_fn);
        let shift = c.ln();
        Self {
            log_fn: Arc::new(move |x| inner(x) + shift),
            support: self.support.clone(),
            kind: self.kind,
        }
    }

    /// The same field restricted to a sub-box.
    pub fn restricted(&self, region: &SupportRegion) -> Option<Self> {
        let support = self.support.intersect(region)?;
        Some(Self { log_fn: Arc::clone(&self.log_fn), support, kind: self.kind })
    }
}

/// Norms, inner product, compatibility and angle for a pair of fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeomSummary {
    pub norm_g: f64,
    pub norm_h: f64,
    pub inner: f64,
    /// Compatibility clamped to [0, 1].
    pub kappa: f64,
    /// Compatibility before clamping.
    pub kappa_raw: f64,
    /// `arccos(kappa)` in degrees.
    pub angle_deg: f64,
}

fn check_dims(g: &ScalarField, h: &ScalarField) -> Result<(), GeometryError> {
    if g.dim() != h.dim() {
        return Err(GeometryError::DimensionMismatch(g.dim(), h.dim()));
    }
    Ok(())
}

fn converged(r: crate::numerics::LogQuadResult, what: &'static str) -> Result<f64, GeometryError> {
    if !r.converged {
        return Err(GeometryError::NotConverged { what, estimate: r.log_value.exp() });
    }
    Ok(r.log_value)
}

/// `ln ∫_region exp(log_f)`.
fn log_integral<F>(log_f: F, region: &SupportRegion, spec: &QuadSpec, what: &'static str) -> Result<f64, GeometryError>
where
    F: Fn(&[f64]) -> f64,
{
    converged(integrate_log(log_f, region, spec)?, what)
}

/// `ln ⟨g, h⟩`; `-inf` when the supports do not overlap.
pub fn log_inner_product(g: &ScalarField, h: &ScalarField, spec: &QuadSpec) -> Result<f64, GeometryError> {
    check_dims(g, h)?;
    match g.support().intersect(h.support()) {
        None => Ok(f64::NEG_INFINITY),
        Some(common) => log_integral(|x| g.eval_log(x) + h.eval_log(x), &common, spec, "inner product"),
    }
}

/// `⟨g, h⟩ = ∫ g h`.
pub fn inner_product(g: &ScalarField, h: &ScalarField, spec: &QuadSpec) -> Result<f64, GeometryError> {
    Ok(log_inner_product(g, h, spec)?.exp())
}

/// `ln ‖g‖`.
pub fn log_norm(g: &ScalarField, spec: &QuadSpec) -> Result<f64, GeometryError> {
    Ok(0.5 * log_integral(|x| 2.0 * g.eval_log(x), g.support(), spec, "norm")?)
}

/// `‖g‖ = ⟨g, g⟩^{1/2}`.
pub fn norm(g: &ScalarField, spec: &QuadSpec) -> Result<f64, GeometryError> {
    Ok(log_norm(g, spec)?.exp())
}

fn summary(log_inner: f64, log_ng: f64, log_nh: f64) -> GeomSummary {
    let kappa_raw = (log_inner - log_ng - log_nh).exp();
    let kappa = kappa_raw.clamp(0.0, 1.0);
    GeomSummary {
        norm_g: log_ng.exp(),
        norm_h: log_nh.exp(),
        inner: log_inner.exp(),
        kappa,
        kappa_raw,
        angle_deg: kappa.acos().to_degrees(),
    }
}

/// Compatibility `κ = ⟨g, h⟩ / (‖g‖ ‖h‖)` together with its ingredients.
pub fn compatibility(g: &ScalarField, h: &ScalarField, spec: &QuadSpec) -> Result<GeomSummary, GeometryError> {
    check_dims(g, h)?;
    let log_ng = log_norm(g, spec)?;
    if log_ng == f64::NEG_INFINITY {
        return Err(GeometryError::ZeroNorm("g"));
    }
    let log_nh = log_norm(h, spec)?;
    if log_nh == f64::NEG_INFINITY {
        return Err(GeometryError::ZeroNorm("h"));
    }
    let log_inner = log_inner_product(g, h, spec)?;
    Ok(summary(log_inner, log_ng, log_nh))
}

/// Local prior-likelihood compatibility `⟨π, ℓ⟩ / (‖π‖ ‖ℓ‖*)`, where `‖ℓ‖*`
/// integrates only over the prior's support box Π.
pub fn local_compatibility(pi: &ScalarField, ell: &ScalarField, spec: &QuadSpec) -> Result<f64, GeometryError> {
    check_dims(pi, ell)?;
    let Some(common) = pi.support().intersect(ell.support()) else {
        return Ok(0.0);
    };
    let log_inner = log_inner_product(pi, ell, spec)?;
    if log_inner == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let log_npi = log_norm(pi, spec)?;
    if log_npi == f64::NEG_INFINITY {
        return Err(GeometryError::ZeroNorm("prior"));
    }
    let r = integrate_log(|x| 2.0 * ell.eval_log(x), &common, spec)?;
    if !r.converged || !r.log_value.is_finite() {
        return Err(GeometryError::NotSquareIntegrable(format!("{common:?}")));
    }
    let log_nell = 0.5 * r.log_value;
    Ok((log_inner - log_npi - log_nell).exp())
}

/// Affine compatibility `⟨√g, √h⟩ / (‖√g‖ ‖√h‖)`; the Hellinger affinity when
/// both fields are probability densities.
pub fn affine_compatibility(g: &ScalarField, h: &ScalarField, spec: &QuadSpec) -> Result<f64, GeometryError> {
    check_dims(g, h)?;
    let log_mass_g = log_integral(|x| g.eval_log(x), g.support(), spec, "norm of sqrt(g)")?;
    if log_mass_g == f64::NEG_INFINITY {
        return Err(GeometryError::ZeroNorm("g"));
    }
    let log_mass_h = log_integral(|x| h.eval_log(x), h.support(), spec, "norm of sqrt(h)")?;
    if log_mass_h == f64::NEG_INFINITY {
        return Err(GeometryError::ZeroNorm("h"));
    }
    let log_inner = match g.support().intersect(h.support()) {
        None => f64::NEG_INFINITY,
        Some(common) => log_integral(
            |x| 0.5 * (g.eval_log(x) + h.eval_log(x)),
            &common,
            spec,
            "inner product of square roots",
        )?,
    };
    Ok((log_inner - 0.5 * (log_mass_g + log_mass_h)).exp())
}

/// Both sides of `‖π‖² = ‖π − π₀‖² + ‖π₀‖²` with π₀ uniform on `region`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PythagorasCheck {
    pub norm_sq: f64,
    pub distance_sq: f64,
    pub uniform_norm_sq: f64,
    pub residual: f64,
}

impl PythagorasCheck {
    pub fn decomposed(&self) -> f64 {
        self.distance_sq + self.uniform_norm_sq
    }
}

pub fn pythagoras_check(pi: &ScalarField, region: &SupportRegion, spec: &QuadSpec) -> Result<PythagorasCheck, GeometryError> {
    if !region.is_bounded() {
        return Err(GeometryError::UnboundedRegion);
    }
    if pi.dim() != region.dim() {
        return Err(GeometryError::DimensionMismatch(pi.dim(), region.dim()));
    }
    if !region.encloses(pi.support()) {
        return Err(GeometryError::SupportOutsideRegion);
    }
    let uniform = 1.0 / region.volume();
    let norm_sq = (2.0 * log_norm(pi, spec)?).exp();
    let r = integrate(|x| (pi.eval(x) - uniform).powi(2), region, spec)?;
    if !r.converged {
        return Err(GeometryError::NotConverged { what: "distance to uniform", estimate: r.value });
    }
    let uniform_norm_sq = uniform;
    let residual = (norm_sq - r.value - uniform_norm_sq).abs();
    Ok(PythagorasCheck { norm_sq, distance_sq: r.value, uniform_norm_sq, residual })
}

/// Differential entropy `−∫ π log π`, with `0 · log 0 = 0`.
pub fn entropy_functional(pi: &ScalarField, spec: &QuadSpec) -> Result<f64, GeometryError> {
    let r = integrate(
        |x| {
            let lp = pi.eval_log(x);
            if lp == f64::NEG_INFINITY {
                0.0
            } else {
                -lp.exp() * lp
            }
        },
        pi.support(),
        spec,
    )?;
    if !r.converged {
        return Err(GeometryError::NotConverged { what: "entropy", estimate: r.value });
    }
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn spec() -> QuadSpec {
        QuadSpec::default()
    }

    fn unif(lo: f64, hi: f64) -> ScalarField {
        ScalarField::uniform(lo, hi).unwrap()
    }

    #[test]
    fn uniform_inner_products() {
        assert!((inner_product(&unif(0.0, 1.0), &unif(0.0, 1.0), &spec()).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(inner_product(&unif(0.0, 1.0), &unif(1.0, 2.0), &spec()).unwrap(), 0.0);
        assert!((inner_product(&unif(0.0, 1.0), &unif(0.0, 2.0), &spec()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn uniform_norms() {
        assert!((norm(&unif(0.0, 1.0), &spec()).unwrap() - 1.0).abs() < 1e-14);
        assert!((norm(&unif(0.0, 2.0), &spec()).unwrap() - FRAC_1_SQRT_2).abs() < 1e-14);
        // ‖Unif(a, b)‖ = (12 σ²)^{-1/4}
        let (a, b) = (-1.3, 2.2);
        let var = (b - a) * (b - a) / 12.0;
        assert!((norm(&unif(a, b), &spec()).unwrap() - (12.0 * var).powf(-0.25)).abs() < 1e-13);
    }

    #[test]
    fn normal_norm_depends_on_variance_only() {
        for var in [0.25, 1.0, 7.5] {
            let n = norm(&ScalarField::normal(1.7, var).unwrap(), &spec()).unwrap();
            assert!((n - (4.0 * PI * var).powf(-0.25)).abs() < 1e-10);
        }
    }

    #[test]
    fn self_compatibility_is_one() {
        let g = ScalarField::beta(2.5, 4.0).unwrap();
        let s = compatibility(&g, &g, &spec()).unwrap();
        assert!((s.kappa - 1.0).abs() < 1e-10);
        assert!(s.angle_deg < 1e-3);
    }

    #[test]
    fn example_uniform_angles() {
        let s = compatibility(&unif(0.0, 1.0), &unif(0.0, 2.0), &spec()).unwrap();
        assert!((s.kappa - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s.angle_deg - 45.0).abs() < 1e-6);
        let s = compatibility(&unif(1.0, 2.0), &unif(1.0, 3.0), &spec()).unwrap();
        assert!((s.angle_deg - 45.0).abs() < 1e-6);
        let s = compatibility(&unif(0.0, 1.0), &unif(1.0, 2.0), &spec()).unwrap();
        assert_eq!(s.kappa, 0.0);
        assert!((s.angle_deg - 90.0).abs() < 1e-12);
    }

    #[test]
    fn zero_norm_is_rejected() {
        let zero = ScalarField::unchecked(|_| f64::NEG_INFINITY, SupportRegion::unit_interval(), FieldKind::Generic);
        assert!(matches!(compatibility(&zero, &unif(0.0, 1.0), &spec()), Err(GeometryError::ZeroNorm(_))));
        assert!(matches!(affine_compatibility(&unif(0.0, 1.0), &zero, &spec()), Err(GeometryError::ZeroNorm(_))));
    }

    #[test]
    fn construction_rejects_non_l2() {
        // 1/sqrt(x) on (0,1) is integrable but not square-integrable.
        let r = ScalarField::new(|x| -0.5 * x[0].ln(), SupportRegion::unit_interval(), FieldKind::Generic);
        assert!(matches!(r, Err(GeometryError::NotSquareIntegrable(_))));
        let ok = ScalarField::new(|x| -0.25 * x[0].ln(), SupportRegion::unit_interval(), FieldKind::Generic);
        assert!(ok.is_ok());
    }

    #[test]
    fn gaussian_hellinger_affinity() {
        for m in [0.0, 0.5, 1.0, 2.5] {
            let g = ScalarField::normal(0.0, 1.0).unwrap();
            let h = ScalarField::normal(m, 1.0).unwrap();
            let a = affine_compatibility(&g, &h, &spec()).unwrap();
            assert!((a - (-m * m / 8.0).exp()).abs() < 1e-9, "m = {m}");
        }
        let a = affine_compatibility(&unif(0.0, 1.0), &unif(0.0, 2.0), &spec()).unwrap();
        assert!((a - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn local_compatibility_with_full_support_equals_global() {
        let pi = ScalarField::beta(3.44, 22.99).unwrap();
        let ell = ScalarField::unchecked(
            |x| 2.0 * x[0].ln() + 8.0 * (-x[0]).ln_1p(),
            SupportRegion::unit_interval(),
            FieldKind::Likelihood,
        );
        let local = local_compatibility(&pi, &ell, &spec()).unwrap();
        let global = compatibility(&pi, &ell, &spec()).unwrap().kappa;
        assert!((local - global).abs() < 1e-10);
    }

    #[test]
    fn local_compatibility_disjoint_mass() {
        let pi = unif(0.0, 1.0);
        let ell = ScalarField::unchecked(
            |x| if x[0] > 2.0 { 0.0 } else { f64::NEG_INFINITY },
            SupportRegion::real_line(),
            FieldKind::Likelihood,
        );
        assert_eq!(local_compatibility(&pi, &ell, &spec()).unwrap(), 0.0);
    }

    #[test]
    fn pythagoras_uniform_and_beta22() {
        let c = pythagoras_check(&unif(0.0, 1.0), &SupportRegion::unit_interval(), &spec()).unwrap();
        assert!(c.residual < 1e-14);
        assert!((c.norm_sq - 1.0).abs() < 1e-14);
        let c = pythagoras_check(&ScalarField::beta(2.0, 2.0).unwrap(), &SupportRegion::unit_interval(), &spec()).unwrap();
        assert!((c.norm_sq - 1.2).abs() < 1e-12);
        assert!((c.distance_sq - 0.2).abs() < 1e-12);
        assert!(c.residual < 1e-12);
    }

    #[test]
    fn pythagoras_rejects_unbounded_region() {
        let g = ScalarField::normal(0.0, 1.0).unwrap();
        assert_eq!(
            pythagoras_check(&g, &SupportRegion::real_line(), &spec()).unwrap_err(),
            GeometryError::UnboundedRegion
        );
    }

    #[test]
    fn entropy_of_uniforms() {
        assert!(entropy_functional(&unif(0.0, 1.0), &spec()).unwrap().abs() < 1e-14);
        assert!((entropy_functional(&unif(0.0, 2.0), &spec()).unwrap() - LN_2).abs() < 1e-13);
    }

    #[test]
    fn scaled_fields_keep_direction() {
        let g = ScalarField::beta(2.0, 5.0).unwrap();
        let s = compatibility(&g, &g.scaled(37.0), &spec()).unwrap();
        assert!((s.kappa_raw - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let plane = ScalarField::unchecked(|_| 0.0, SupportRegion::new(vec![0.0; 2], vec![1.0; 2]).unwrap(), FieldKind::Generic);
        assert!(matches!(
            inner_product(&plane, &unif(0.0, 1.0), &spec()),
            Err(GeometryError::DimensionMismatch(2, 1))
        ));
    }
}
