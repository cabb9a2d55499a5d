//! Importance-sampling estimates of `ln ∫ f` with a multivariate Student-t
//! proposal matched to a set of draws, typically posterior draws of `f`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{stream_rng, EstimatorError};
use crate::numerics::{log_gamma, log_sum_exp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEvidence {
    pub log_value: f64,
    /// Standard error of the estimate relative to its value, which is also
    /// the standard error of `log_value` to first order.
    pub rel_se: f64,
    /// Kish effective sample size of the importance weights.
    pub ess: f64,
}

struct StudentT {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    dof: f64,
    log_norm: f64,
}

impl StudentT {
    fn fit(draws: &[Vec<f64>], dof: f64) -> Result<Self, EstimatorError> {
        let d = draws.first().map_or(0, Vec::len);
        if draws.len() <= d || d == 0 {
            return Err(EstimatorError::Domain(format!(
                "{} draws cannot fit a {d}-dimensional proposal",
                draws.len()
            )));
        }
        let nf = draws.len() as f64;
        let mut mean = DVector::zeros(d);
        for x in draws {
            mean += DVector::from_column_slice(x);
        }
        mean /= nf;
        let mut cov = DMatrix::zeros(d, d);
        for x in draws {
            let c = DVector::from_column_slice(x) - &mean;
            cov += &c * c.transpose();
        }
        cov /= nf - 1.0;
        let chol = cov
            .cholesky()
            .ok_or_else(|| EstimatorError::Domain("draw covariance is not positive definite".into()))?
            .l();
        let df = d as f64;
        let log_det: f64 = (0..d).map(|i| chol[(i, i)].ln()).sum::<f64>() * 2.0;
        let log_norm = log_gamma(0.5 * (dof + df)).map_err(|e| EstimatorError::Domain(e.to_string()))?
            - log_gamma(0.5 * dof).map_err(|e| EstimatorError::Domain(e.to_string()))?
            - 0.5 * df * (dof * std::f64::consts::PI).ln()
            - 0.5 * log_det;
        Ok(Self { mean, chol, dof, log_norm })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.mean.len();
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let w: f64 = ChiSquared::new(self.dof).expect("positive dof").sample(rng);
        let x = &self.mean + (&self.chol * z) / (w / self.dof).sqrt();
        x.iter().copied().collect()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(x) - &self.mean;
        let u = self.chol.solve_lower_triangular(&diff).expect("nonsingular factor");
        let d = self.mean.len() as f64;
        self.log_norm - 0.5 * (self.dof + d) * (u.norm_squared() / self.dof).ln_1p()
    }
}

/// `ln ∫ exp(log_f)` from `count` draws of a Student-t with `dof` degrees
/// of freedom whose location and scale are the mean and covariance of
/// `fit_draws`.
pub fn importance_log_integral<F>(
    log_f: F,
    fit_draws: &[Vec<f64>],
    count: usize,
    dof: f64,
    seed: u64,
    stream: u64,
) -> Result<LogEvidence, EstimatorError>
where
    F: Fn(&[f64]) -> f64,
{
    if count < 2 {
        return Err(EstimatorError::EmptyDraws("importance"));
    }
    if !(dof > 0.0) {
        return Err(EstimatorError::Domain(format!("degrees of freedom {dof} must be positive")));
    }
    let q = StudentT::fit(fit_draws, dof)?;
    let mut rng = stream_rng(seed, stream);
    let log_w: Vec<f64> = (0..count)
        .map(|_| {
            let x = q.sample(&mut rng);
            log_f(&x) - q.log_density(&x)
        })
        .collect();
    if log_w.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(EstimatorError::Domain("importance weight is not finite".into()));
    }
    let s1 = log_sum_exp(&log_w);
    if s1 == f64::NEG_INFINITY {
        return Err(EstimatorError::Domain("all importance weights vanish".into()));
    }
    let sq: Vec<f64> = log_w.iter().map(|w| 2.0 * w).collect();
    let ess = (2.0 * s1 - log_sum_exp(&sq)).exp();
    let n = count as f64;
    let rel_se = ((n / ess - 1.0).max(0.0) / (n - 1.0)).sqrt();
    Ok(LogEvidence { log_value: s1 - n.ln(), rel_se, ess })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        // ∫ 3·N(x; (1, -2), diag(0.5, 2)) dx = 3
        let log_f = |x: &[f64]| {
            3f64.ln() - (2.0 * std::f64::consts::PI).ln() - 0.5 * (0.5f64 * 2.0).ln()
                - 0.5 * ((x[0] - 1.0).powi(2) / 0.5 + (x[1] + 2.0).powi(2) / 2.0)
        };
        let mut rng = stream_rng(1, 0);
        let fit: Vec<Vec<f64>> = (0..2000)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                vec![1.0 + 0.5f64.sqrt() * a, -2.0 + 2f64.sqrt() * b]
            })
            .collect();
        let ev = importance_log_integral(log_f, &fit, 20_000, 5.0, 3, 0).unwrap();
        assert!((ev.log_value - 3f64.ln()).abs() < 4.0 * ev.rel_se, "{ev:?}");
        assert!(ev.rel_se < 0.01 && ev.ess > 10_000.0, "{ev:?}");
        let again = importance_log_integral(log_f, &fit, 20_000, 5.0, 3, 0).unwrap();
        assert_eq!(ev, again);
    }

    #[test]
    fn student_t_density_integrates_to_one() {
        let fit = vec![vec![0.0], vec![1.0], vec![2.0], vec![-1.0]];
        let q = StudentT::fit(&fit, 3.0).unwrap();
        let h = 1e-3;
        let total: f64 = (-200_000..200_000).map(|i| q.log_density(&[i as f64 * h]).exp() * h).sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn rejects_degenerate_fits() {
        assert!(importance_log_integral(|_| 0.0, &[vec![1.0]], 10, 4.0, 0, 0).is_err());
        let flat = vec![vec![1.0, 2.0]; 10];
        assert!(importance_log_integral(|_| 0.0, &flat, 10, 4.0, 0, 0).is_err());
    }
}
