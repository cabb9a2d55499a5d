//! Log-domain special functions.
//!
//! `log_gamma` combines three regimes so that relative accuracy holds all the
//! way through the zeros of ln Γ at 1 and 2:
//!
//! * `x < 0.5`: recurrence upward, `ln Γ(x) = ln Γ(x + 1) - ln x`.
//! * `0.5 <= x < 10`: shift into `[1.5, 2.5)` (or `[0.5, 1.5)`) and use the
//!   series of `ln Γ(1 + z)` in `ζ(k) - 1`, which converges like `(z/2)^k`.
//! * `x >= 10`: Stirling's series with eight Bernoulli terms.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::NumericsError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_405_617_6;

/// Number of `ζ(k) - 1` coefficients used by the small-argument series.
const ZETA_TERMS: usize = 40;

/// Stirling coefficients `B_{2k} / (2k (2k - 1))`, k = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `ζ(k) - 1` for k = 2..ZETA_TERMS+2, by direct summation of `m^-k` for
/// `m = 2..=M` (smallest terms first) plus an Euler-Maclaurin tail.
fn zeta_minus_one() -> &'static [f64; ZETA_TERMS] {
    static TABLE: OnceLock<[f64; ZETA_TERMS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        const M: usize = 2000;
        let mut table = [0.0; ZETA_TERMS];
        for (i, slot) in table.iter_mut().enumerate() {
            let k = (i + 2) as f64;
            let m = M as f64;
            // tail: sum_{j > M} j^-k via Euler-Maclaurin around M.
            let mut sum = m.powf(1.0 - k) / (k - 1.0) - 0.5 * m.powf(-k)
                + k / 12.0 * m.powf(-k - 1.0)
                - k * (k + 1.0) * (k + 2.0) / 720.0 * m.powf(-k - 3.0);
            for j in (2..=M).rev() {
                sum += (j as f64).powf(-k);
            }
            *slot = sum;
        }
        table
    })
}

/// `ln Γ(2 + z) = z (1 - γ) + Σ_{k≥2} (-1)^k (ζ(k) - 1) z^k / k`, valid for
/// `|z| <= 0.5` at full double precision.
fn ln_gamma_2p(z: f64) -> f64 {
    let zeta = zeta_minus_one();
    let mut power = -z;
    let mut series = 0.0;
    for (i, c) in zeta.iter().enumerate() {
        power *= -z;
        let k = (i + 2) as f64;
        let term = c * power / k;
        series += term;
        if term.abs() < 1e-18 * series.abs().max(1e-300) {
            break;
        }
    }
    // `power` carries the sign (-1)^k z^k.
    z * (1.0 - EULER_GAMMA) + series
}

fn ln_gamma_stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut p = inv;
    for c in STIRLING {
        corr += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + corr
}

/// `ln Γ(x)` without argument checking; NaN for `x <= 0`.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return ln_gamma(x + 1.0) - x.ln();
    }
    if x < 1.5 {
        // ln Γ(x) = ln Γ(2 + z) - ln(1 + z) with z = x - 1.
        let z = x - 1.0;
        return ln_gamma_2p(z) - z.ln_1p();
    }
    if x < 10.0 {
        let mut y = x;
        let mut prod = 1.0;
        while y >= 2.5 {
            y -= 1.0;
            prod *= y;
        }
        return ln_gamma_2p(y - 2.0) + prod.ln();
    }
    ln_gamma_stirling(x)
}

/// `ln B(a, b)` without argument checking.
///
/// Written so that swapping the arguments gives a bit-identical result.
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    ln_gamma(lo) + ln_gamma(hi) - ln_gamma(lo + hi)
}

/// Natural log of the gamma function.
pub fn log_gamma(x: f64) -> Result<f64, NumericsError> {
    if !(x > 0.0) || x.is_nan() {
        return Err(NumericsError::Domain {
            function: "log_gamma",
            detail: format!("x = {x} must be positive"),
        });
    }
    Ok(ln_gamma(x))
}

/// Natural log of the beta function `B(a, b) = Γ(a) Γ(b) / Γ(a + b)`.
pub fn log_beta(a: f64, b: f64) -> Result<f64, NumericsError> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(NumericsError::Domain {
            function: "log_beta",
            detail: format!("a = {a}, b = {b} must both be positive"),
        });
    }
    Ok(ln_beta(a, b))
}

/// `ln C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64, NumericsError> {
    if k > n {
        return Err(NumericsError::Domain {
            function: "log_binomial",
            detail: format!("k = {k} exceeds n = {n}"),
        });
    }
    if k == 0 || k == n {
        return Ok(0.0);
    }
    let (n, k) = (n as f64, k as f64);
    Ok(ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0))
}

/// Stable `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted `ln Σ exp(x_i)`; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln Γ(s, x)`, the log of the upper incomplete gamma function
/// `∫_x^∞ t^{s-1} e^{-t} dt`, for `s > 0` and `x ≥ 0`.
///
/// Uses the power series of the lower function below `x = s + 1` and a
/// Lentz continued fraction above it, so the result stays finite long after
/// `Γ(s, x)` itself underflows.
pub fn log_upper_gamma(s: f64, x: f64) -> Result<f64, NumericsError> {
    if !(s > 0.0) || !(x >= 0.0) || s.is_infinite() {
        return Err(NumericsError::Domain {
            function: "log_upper_gamma",
            detail: format!("s = {s} must be positive and x = {x} non-negative"),
        });
    }
    if x == 0.0 {
        return Ok(ln_gamma(s));
    }
    if x == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let log_prefactor = s * x.ln() - x;
    if x < s + 1.0 {
        // γ(s, x) = x^s e^{-x} Σ_k x^k / (s (s+1) ... (s+k))
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut a = s;
        for _ in 0..10_000 {
            a += 1.0;
            term *= x / a;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let lower_frac = (log_prefactor + sum.ln() - ln_gamma(s)).exp();
        return Ok(ln_gamma(s) + (-lower_frac).ln_1p());
    }
    // Γ(s, x) = x^s e^{-x} / (x + 1 - s - 1·(1-s)/(x + 3 - s - ...))
    let tiny = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    Ok(log_prefactor + h.ln())
}

/// `ln Γ(1/2) = ln √π`, used by callers that want the constant by name.
pub fn ln_sqrt_pi() -> f64 {
    0.5 * PI.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial(n: u64) -> f64 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn gamma_anchors() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-15);
        let half = log_gamma(0.5).unwrap();
        assert!((half - 0.572_364_942_924_700_1).abs() < 1e-15);
        let ten = log_gamma(10.0).unwrap();
        assert!((ten - 362_880f64.ln()).abs() / ten < 1e-14);
        assert!((ten - 12.801_827_480_081_469).abs() < 1e-13);
    }

    #[test]
    fn gamma_matches_factorials() {
        for n in 1..=170u64 {
            let exact = ln_factorial(n - 1);
            let got = ln_gamma(n as f64);
            let scale = exact.abs().max(1.0);
            assert!(
                (got - exact).abs() / scale < 1e-13,
                "n = {n}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn gamma_half_integers() {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!)
        for k in 0..60u64 {
            let exact = ln_factorial(2 * k) + ln_sqrt_pi()
                - (k as f64) * 4f64.ln()
                - ln_factorial(k);
            let got = ln_gamma(k as f64 + 0.5);
            let scale = exact.abs().max(1e-3);
            assert!((got - exact).abs() / scale < 2e-13, "k = {k}");
        }
    }

    #[test]
    fn gamma_near_its_zeros_is_relatively_accurate() {
        // ln Γ(1 + z) ≈ -γ z and ln Γ(2 + z) ≈ (1 - γ) z for tiny z.
        let z = 1e-9;
        let r1 = ln_gamma(1.0 + z) / (-EULER_GAMMA * z);
        let r2 = ln_gamma(2.0 + z) / ((1.0 - EULER_GAMMA) * z);
        assert!((r1 - 1.0).abs() < 1e-6);
        assert!((r2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
        assert!(log_beta(0.0, 1.0).is_err());
        assert!(log_beta(1.0, -2.0).is_err());
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn beta_anchors() {
        assert!(log_beta(1.0, 1.0).unwrap().abs() < 1e-15);
        let b28 = log_beta(2.0, 8.0).unwrap();
        assert!((b28 - (1.0f64 / 72.0).ln()).abs() < 1e-13);
        assert!((b28 + 4.276_666_119_016_055).abs() < 1e-12);
        let bhalf = log_beta(0.5, 0.5).unwrap();
        assert!((bhalf - PI.ln()).abs() < 1e-14);
        let b39 = log_beta(3.0, 9.0).unwrap();
        assert!((b39 - (1.0f64 / 495.0).ln()).abs() < 1e-13);
    }

    #[test]
    fn binomial_values() {
        assert!((log_binomial(10, 2).unwrap() - 45f64.ln()).abs() < 1e-13);
        assert_eq!(log_binomial(7, 0).unwrap(), 0.0);
        assert_eq!(log_binomial(7, 7).unwrap(), 0.0);
    }

    #[test]
    fn upper_gamma_values() {
        // Γ(1, x) = e^{-x}
        for x in [0.0, 0.3, 1.9, 2.5, 40.0, 800.0] {
            assert!((log_upper_gamma(1.0, x).unwrap() + x).abs() < 1e-13 * x.max(1.0), "{x}");
        }
        // Γ(1/2, x) = √π erfc(√x); erfc(1) = 0.15729920705028513
        let want = ln_sqrt_pi() + 0.157_299_207_050_285_13f64.ln();
        assert!((log_upper_gamma(0.5, 1.0).unwrap() - want).abs() < 1e-13);
        // Γ(3, x) = e^{-x} (x² + 2x + 2), on both sides of the branch switch
        for x in [0.5, 3.9, 4.1, 30.0, 1e4] {
            let want = -x + (x * x + 2.0 * x + 2.0f64).ln();
            let got = log_upper_gamma(3.0, x).unwrap();
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "{x}: {got} vs {want}");
        }
        assert_eq!(log_upper_gamma(4.5, 0.0).unwrap(), ln_gamma(4.5));
        assert!(log_upper_gamma(0.0, 1.0).is_err());
        assert!(log_upper_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(-800.0, -800.0) - (-800.0 + 2f64.ln())).abs() < 1e-12);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn beta_symmetry_is_exact(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
                prop_assert_eq!(log_beta(a, b).unwrap().to_bits(), log_beta(b, a).unwrap().to_bits());
            }

            #[test]
            fn recurrence(x in 1e-3f64..1e5) {
                // ln Γ(x + 1) = ln Γ(x) + ln x
                let lhs = ln_gamma(x + 1.0);
                let rhs = ln_gamma(x) + x.ln();
                let scale = lhs.abs().max(rhs.abs()).max(1.0);
                prop_assert!((lhs - rhs).abs() / scale < 1e-13);
            }

            #[test]
            fn legendre_duplication(x in 1e-3f64..1e5) {
                let lhs = ln_gamma(x) + ln_gamma(x + 0.5);
                let rhs = (1.0 - 2.0 * x) * 2f64.ln() + ln_sqrt_pi() + ln_gamma(2.0 * x);
                let scale = lhs.abs().max(1.0);
                prop_assert!((lhs - rhs).abs() / scale < 1e-13);
            }
        }
    }
}
