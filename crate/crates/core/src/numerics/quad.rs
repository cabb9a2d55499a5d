//! Deterministic adaptive Gauss-Kronrod (7/15) quadrature over boxes of
//! dimension at most three.
//!
//! Unbounded axes are mapped onto finite intervals before the adaptive loop
//! runs. Multi-dimensional boxes are integrated as iterated one-dimensional
//! integrals; the inner integrals run at a tenth of the outer tolerance.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Largest box dimension handled by the tensor rule.
pub const MAX_QUAD_DIM: usize = 3;

/// Axis-aligned box in R^p; bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SupportRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, NumericsError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(NumericsError::InvalidRegion(format!(
                "bounds must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || !(lo < hi) {
                return Err(NumericsError::InvalidRegion(format!(
                    "axis {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional interval `(lo, hi)`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self, NumericsError> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn unit_interval() -> Self {
        Self { lower: vec![0.0], upper: vec![1.0] }
    }

    pub fn real_line() -> Self {
        Self { lower: vec![f64::NEG_INFINITY], upper: vec![f64::INFINITY] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// Lebesgue measure; infinite for unbounded boxes.
    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    /// Whether `other` lies entirely inside `self`.
    pub fn encloses(&self, other: &SupportRegion) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|i| self.lower[i] <= other.lower[i] && other.upper[i] <= self.upper[i])
    }

    /// Intersection of two boxes, or `None` when it has no interior.
    pub fn intersect(&self, other: &SupportRegion) -> Option<SupportRegion> {
        if self.dim() != other.dim() {
            return None;
        }
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        if lower.iter().zip(&upper).all(|(lo, hi)| lo < hi) {
            Some(SupportRegion { lower, upper })
        } else {
            None
        }
    }
}

/// Substitution used for axes with an infinite end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnboundedTransform {
    /// `x = a + t / (1 - t)`; doubly infinite axes are split at zero.
    #[default]
    Rational,
    /// `x = a + tan(π t / 2)`; doubly infinite axes use `tan(π (t - 1/2))`.
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub unbounded_transform: UnboundedTransform,
    /// Panels per axis piece before adaptive refinement starts.
    pub initial_panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            unbounded_transform: UnboundedTransform::Rational,
            initial_panels: 4,
        }
    }
}

impl QuadSpec {
    pub fn with_tolerance(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol >= 0.0) || self.max_subdivisions < 1 {
            return Err(NumericsError::InvalidSpec(format!(
                "rel_tol = {}, abs_tol = {}, max_subdivisions = {}",
                self.rel_tol, self.abs_tol, self.max_subdivisions
            )));
        }
        if self.initial_panels < 1 {
            return Err(NumericsError::InvalidSpec("initial_panels must be at least 1".into()));
        }
        Ok(())
    }

    fn inner(&self) -> Self {
        Self {
            rel_tol: (self.rel_tol * 0.1).max(1e-14),
            abs_tol: self.abs_tol * 0.1,
            ..*self
        }
    }
}

/// Outcome of an integration; `converged == false` means the subdivision
/// budget ran out and `value` is the best available estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Result of [`integrate_log`]: the integral of `exp(log_f)` reported as a log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuadResult {
    pub log_value: f64,
    /// Estimated relative error of `exp(log_value)`.
    pub rel_error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

// Nodes and weights of the 7-point Gauss / 15-point Kronrod pair.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Map from a finite `t` interval onto one piece of an axis.
#[derive(Debug, Clone, Copy)]
enum AxisMap {
    Identity,
    RationalUp(f64),
    RationalDown(f64),
    TangentUp(f64),
    TangentDown(f64),
    TangentBoth,
    /// `x = lo + (hi − lo) I_t(4, 4)` on `t ∈ (0, 1)`; the Jacobian vanishes
    /// like `t³` at both ends, which tames algebraic endpoint singularities.
    Smooth(f64, f64),
    /// `x = lo + (w/2)(2t)^k` on the lower half of `t ∈ (0, 1)`, mirrored on
    /// the upper half; for singularities too strong for `Smooth`.
    Power(f64, f64, i32),
}

/// Regularized incomplete beta `I_t(4, 4)`, evaluated on the near half.
#[inline]
fn smoothstep7(t: f64) -> f64 {
    t.powi(4) * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
}

impl AxisMap {
    /// Returns `(x, dx/dt)`.
    #[inline]
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            AxisMap::Identity => (t, 1.0),
            AxisMap::RationalUp(a) => {
                let s = 1.0 - t;
                (a + t / s, 1.0 / (s * s))
            }
            AxisMap::RationalDown(b) => {
                let s = 1.0 - t;
                (b - t / s, 1.0 / (s * s))
            }
            AxisMap::TangentUp(a) => {
                let u = FRAC_PI_2 * t;
                let c = u.cos();
                (a + u.tan(), FRAC_PI_2 / (c * c))
            }
            AxisMap::TangentDown(b) => {
                let u = FRAC_PI_2 * t;
                let c = u.cos();
                (b - u.tan(), FRAC_PI_2 / (c * c))
            }
            AxisMap::TangentBoth => {
                let u = std::f64::consts::PI * (t - 0.5);
                let c = u.cos();
                (u.tan(), std::f64::consts::PI / (c * c))
            }
            AxisMap::Smooth(lo, hi) => {
                let w = hi - lo;
                let s = 1.0 - t;
                let x = if t <= 0.5 { lo + w * smoothstep7(t) } else { hi - w * smoothstep7(s) };
                (x, 140.0 * w * (t * s).powi(3))
            }
            AxisMap::Power(lo, hi, k) => {
                let w = hi - lo;
                let kf = f64::from(k);
                if t <= 0.5 {
                    let u = 2.0 * t;
                    (lo + 0.5 * w * u.powi(k), w * kf * u.powi(k - 1))
                } else {
                    let u = 2.0 * (1.0 - t);
                    (hi - 0.5 * w * u.powi(k), w * kf * u.powi(k - 1))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    map: AxisMap,
    lo: f64,
    hi: f64,
}

fn axis_pieces(lo: f64, hi: f64, transform: UnboundedTransform) -> Vec<Piece> {
    use UnboundedTransform::*;
    let unit = |map| Piece { map, lo: 0.0, hi: 1.0 };
    match (lo.is_finite(), hi.is_finite(), transform) {
        (true, true, _) => vec![Piece { map: AxisMap::Identity, lo, hi }],
        (true, false, Rational) => vec![unit(AxisMap::RationalUp(lo))],
        (false, true, Rational) => vec![unit(AxisMap::RationalDown(hi))],
        (false, false, Rational) => {
            vec![unit(AxisMap::RationalDown(0.0)), unit(AxisMap::RationalUp(0.0))]
        }
        (true, false, Tangent) => vec![unit(AxisMap::TangentUp(lo))],
        (false, true, Tangent) => vec![unit(AxisMap::TangentDown(hi))],
        (false, false, Tangent) => vec![unit(AxisMap::TangentBoth)],
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    piece: usize,
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // Largest error first; ties broken by position so the order is total
    // and the refinement sequence deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.piece.cmp(&self.piece))
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

/// One Gauss-Kronrod 15 panel on `[lo, hi]` of the mapped integrand.
fn gk15<F>(f: &mut F, map: AxisMap, lo: f64, hi: f64) -> Result<(f64, f64), NumericsError>
where
    F: FnMut(f64) -> Result<f64, NumericsError>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |t: f64| -> Result<f64, NumericsError> {
        let (x, jac) = map.apply(t);
        if let AxisMap::Smooth(lo, hi) | AxisMap::Power(lo, hi, _) = map {
            // Nodes that round onto an endpoint carry no weight.
            if jac == 0.0 || x <= lo || x >= hi {
                return Ok(0.0);
            }
        }
        let v = f(x)?;
        if v.is_nan() {
            return Err(NumericsError::NanIntegrand { at: vec![x] });
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        let out = v * jac;
        if !out.is_finite() {
            return Err(NumericsError::NonFiniteIntegrand { at: vec![x] });
        }
        Ok(out)
    };

    let fc = eval(center)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    let abs_half = half.abs();
    Ok((res_k * half, rescale_error(err, res_abs * abs_half, res_asc * abs_half)))
}

/// Adaptive one-dimensional driver over `[lo, hi]` (either end may be infinite).
///
/// A finite interval that fails to converge is retried under endpoint
/// substitutions of increasing strength until one converges; the result
/// with the smallest error estimate is kept.
fn adaptive_1d<F>(mut f: F, lo: f64, hi: f64, spec: &QuadSpec) -> Result<QuadResult, NumericsError>
where
    F: FnMut(f64) -> Result<f64, NumericsError>,
{
    let mut best = adaptive_pieces(&mut f, &axis_pieces(lo, hi, spec.unbounded_transform), spec)?;
    if best.converged || !(lo.is_finite() && hi.is_finite()) {
        return Ok(best);
    }
    let mut evaluations = best.evaluations;
    for map in [AxisMap::Smooth(lo, hi), AxisMap::Power(lo, hi, 16), AxisMap::Power(lo, hi, 64)] {
        let r = match adaptive_pieces(&mut f, &[Piece { map, lo: 0.0, hi: 1.0 }], spec) {
            Ok(r) => r,
            Err(NumericsError::NonFiniteIntegrand { .. }) => continue,
            Err(e) => return Err(e),
        };
        evaluations += r.evaluations;
        if r.converged || r.abs_error < best.abs_error {
            best = r;
        }
        if best.converged {
            break;
        }
    }
    Ok(QuadResult { evaluations, ..best })
}

fn adaptive_pieces<F>(f: &mut F, pieces: &[Piece], spec: &QuadSpec) -> Result<QuadResult, NumericsError>
where
    F: FnMut(f64) -> Result<f64, NumericsError>,
{
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for (idx, piece) in pieces.iter().enumerate() {
        let width = (piece.hi - piece.lo) / spec.initial_panels as f64;
        for k in 0..spec.initial_panels {
            let a = piece.lo + width * k as f64;
            let b = if k + 1 == spec.initial_panels { piece.hi } else { a + width };
            let (value, err) = gk15(f, piece.map, a, b)?;
            evaluations += 15;
            heap.push(Panel { piece: idx, lo: a, hi: b, value, err });
        }
    }

    let mut subdivisions = 0usize;
    // Panels too narrow to split further; kept out of the heap.
    let mut frozen: Vec<Panel> = Vec::new();
    loop {
        let (total, total_err) = heap
            .iter()
            .chain(frozen.iter())
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= tol {
            return Ok(QuadResult { value: total, abs_error: total_err, converged: true, evaluations });
        }
        let Some(worst) = heap.pop() else {
            return Ok(QuadResult { value: total, abs_error: total_err, converged: false, evaluations });
        };
        if subdivisions >= spec.max_subdivisions {
            heap.push(worst);
            return Ok(QuadResult { value: total, abs_error: total_err, converged: false, evaluations });
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let piece = pieces[worst.piece];
        let scale = worst.lo.abs().max(worst.hi.abs()).max(piece.hi - piece.lo);
        if (worst.hi - worst.lo) <= 1e3 * f64::EPSILON * scale || mid <= worst.lo || mid >= worst.hi {
            frozen.push(worst);
            continue;
        }
        let map = piece.map;
        let (v1, e1) = gk15(f, map, worst.lo, mid)?;
        let (v2, e2) = gk15(f, map, mid, worst.hi)?;
        evaluations += 30;
        subdivisions += 1;
        heap.push(Panel { piece: worst.piece, lo: worst.lo, hi: mid, value: v1, err: e1 });
        heap.push(Panel { piece: worst.piece, lo: mid, hi: worst.hi, value: v2, err: e2 });
    }
}

/// Integrate `f` over `region`.
///
/// Non-convergence is not an error: the best estimate comes back with
/// `converged == false`. NaN or infinite integrand values are errors.
pub fn integrate<F>(f: F, region: &SupportRegion, spec: &QuadSpec) -> Result<QuadResult, NumericsError>
where
    F: Fn(&[f64]) -> f64,
{
    spec.validate()?;
    let dim = region.dim();
    if dim > MAX_QUAD_DIM {
        return Err(NumericsError::DimensionTooHigh { dim, max: MAX_QUAD_DIM });
    }
    let mut point = vec![0.0; dim];
    let all_converged = Cell::new(true);
    let inner_rel_err = Cell::new(0.0f64);
    let evaluations = Cell::new(0usize);
    let outer = nested(&f, region, spec, 0, &mut point, &all_converged, &inner_rel_err, &evaluations)?;
    Ok(QuadResult {
        value: outer.value,
        abs_error: outer.abs_error + inner_rel_err.get() * outer.value.abs(),
        converged: outer.converged && all_converged.get(),
        evaluations: evaluations.get() + outer.evaluations,
    })
}

#[allow(clippy::too_many_arguments)]
fn nested<F>(
    f: &F,
    region: &SupportRegion,
    spec: &QuadSpec,
    axis: usize,
    point: &mut Vec<f64>,
    all_converged: &Cell<bool>,
    inner_rel_err: &Cell<f64>,
    evaluations: &Cell<usize>,
) -> Result<QuadResult, NumericsError>
where
    F: Fn(&[f64]) -> f64,
{
    let lo = region.lower()[axis];
    let hi = region.upper()[axis];
    let last = axis + 1 == region.dim();
    let inner_spec = spec.inner();
    // The point buffer is moved into the closure and handed back afterwards.
    let buf = std::mem::take(point);
    let buf = std::cell::RefCell::new(buf);
    let result = adaptive_1d(
        |x| {
            let mut p = buf.borrow_mut();
            p[axis] = x;
            if last {
                let v = f(&p);
                if v.is_nan() {
                    return Err(NumericsError::NanIntegrand { at: p.clone() });
                }
                if v.is_infinite() {
                    return Err(NumericsError::NonFiniteIntegrand { at: p.clone() });
                }
                Ok(v)
            } else {
                let mut inner_point = std::mem::take(&mut *p);
                drop(p);
                let r = nested(
                    f,
                    region,
                    &inner_spec,
                    axis + 1,
                    &mut inner_point,
                    all_converged,
                    inner_rel_err,
                    evaluations,
                );
                *buf.borrow_mut() = inner_point;
                let r = r?;
                evaluations.set(evaluations.get() + r.evaluations);
                if !r.converged {
                    all_converged.set(false);
                }
                if r.value != 0.0 {
                    let rel = r.abs_error / r.value.abs();
                    if rel > inner_rel_err.get() {
                        inner_rel_err.set(rel);
                    }
                }
                Ok(r.value)
            }
        },
        lo,
        hi,
        spec,
    );
    *point = buf.into_inner();
    result
}

/// Probe points per axis used to choose the log-domain shift.
const PROBE_POINTS: usize = 17;

fn probe_max<F>(log_f: &F, region: &SupportRegion, transform: UnboundedTransform) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let axes: Vec<Vec<f64>> = (0..region.dim())
        .map(|i| {
            let mut xs = Vec::new();
            for piece in axis_pieces(region.lower()[i], region.upper()[i], transform) {
                for k in 0..PROBE_POINTS {
                    let t = piece.lo + (piece.hi - piece.lo) * (k as f64 + 0.5) / PROBE_POINTS as f64;
                    xs.push(piece.map.apply(t).0);
                }
            }
            xs
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; axes.len()];
    let mut point = vec![0.0; axes.len()];
    loop {
        for (d, &i) in idx.iter().enumerate() {
            point[d] = axes[d][i];
        }
        let v = log_f(&point);
        if v > best && v.is_finite() {
            best = v;
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == axes.len() {
                return best;
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Largest exponent left between the shifted peak and overflow.
const LOG_HEADROOM: f64 = 600.0;

fn overflowed(r: &Result<QuadResult, NumericsError>) -> bool {
    match r {
        Err(NumericsError::NonFiniteIntegrand { .. }) => true,
        Ok(q) => !q.value.is_finite(),
        Err(_) => false,
    }
}

/// Integrate `exp(log_f)` over `region`, returning the log of the integral.
///
/// The integrand is shifted by its (probed) maximum before exponentiating,
/// so integrals far outside the `f64` range are representable. If the
/// adaptive pass overflows or underflows entirely it reruns once with a
/// shift taken from the values it saw.
pub fn integrate_log<F>(log_f: F, region: &SupportRegion, spec: &QuadSpec) -> Result<LogQuadResult, NumericsError>
where
    F: Fn(&[f64]) -> f64,
{
    spec.validate()?;
    if region.dim() > MAX_QUAD_DIM {
        return Err(NumericsError::DimensionTooHigh { dim: region.dim(), max: MAX_QUAD_DIM });
    }
    let probed = probe_max(&log_f, region, spec.unbounded_transform);
    let mut shift = if probed.is_finite() { probed } else { 0.0 };
    let mut evaluations = 0usize;
    for pass in 0..2 {
        let seen = Cell::new(f64::NEG_INFINITY);
        let result = integrate(
            |x| {
                let lf = log_f(x);
                if lf.is_nan() {
                    return f64::NAN;
                }
                if lf > seen.get() {
                    seen.set(lf);
                }
                (lf - shift).exp()
            },
            region,
            spec,
        );
        let max_seen = seen.get();
        let needs_rerun = match &result {
            Err(NumericsError::NonFiniteIntegrand { .. }) => true,
            Ok(r) => max_seen.is_finite() && (!r.value.is_finite() || r.value == 0.0),
            Err(_) => false,
        };
        if pass == 0 && needs_rerun && max_seen.is_finite() && max_seen != shift {
            if let Ok(r) = &result {
                evaluations += r.evaluations;
            }
            // Headroom below the peak keeps the bulk representable when the
            // peak is an integrable singularity.
            shift = if overflowed(&result) { max_seen - LOG_HEADROOM } else { max_seen };
            continue;
        }
        let r = result?;
        evaluations += r.evaluations;
        if max_seen == f64::NEG_INFINITY || r.value == 0.0 {
            return Ok(LogQuadResult {
                log_value: f64::NEG_INFINITY,
                rel_error: 0.0,
                converged: r.converged,
                evaluations,
            });
        }
        return Ok(LogQuadResult {
            log_value: r.value.ln() + shift,
            rel_error: r.abs_error / r.value.abs(),
            converged: r.converged,
            evaluations,
        });
    }
    unreachable!("second pass always returns")
}
