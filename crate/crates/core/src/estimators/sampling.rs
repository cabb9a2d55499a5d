//! Direct Beta sampling and blockwise random-walk Metropolis.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{stream_rng, EstimatorError};

/// `count` i.i.d. Beta(a, b) draws from stream `stream` of `seed`.
pub fn sample_direct_beta(a: f64, b: f64, count: usize, seed: u64, stream: u64) -> Result<Vec<f64>, EstimatorError> {
    if count == 0 {
        return Err(EstimatorError::Domain("draw count must be at least 1".into()));
    }
    let dist = Beta::new(a, b).map_err(|e| EstimatorError::Domain(format!("Beta({a}, {b}): {e}")))?;
    let mut rng = stream_rng(seed, stream);
    Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
}

/// A group of coordinates updated together. The proposal is
/// `scale · L z` with `z ~ N(0, I)` and `L` the optional lower-triangular
/// factor (identity when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub indices: Vec<usize>,
    #[serde(default)]
    pub chol: Option<Vec<Vec<f64>>>,
}

impl Block {
    pub fn single(i: usize) -> Self {
        Self { indices: vec![i], chol: None }
    }
}

/// Random-walk Metropolis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Total iterations including burn-in.
    pub steps: usize,
    /// Burn-in iterations; `None` means 10% of `steps`.
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default = "one")]
    pub thin: usize,
    /// One proposal scale per block.
    pub step_scale: Vec<f64>,
    /// Blocks updated in turn each iteration; `None` means one block per
    /// coordinate.
    #[serde(default)]
    pub blocks: Option<Vec<Block>>,
    /// Adjust block scales toward 20–40% acceptance during burn-in.
    #[serde(default = "yes")]
    pub tune: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl McmcConfig {
    pub fn new(steps: usize, step_scale: Vec<f64>) -> Self {
        Self { steps, burn_in: None, thin: 1, step_scale, blocks: None, tune: true }
    }

    pub fn burn_in_steps(&self) -> usize {
        self.burn_in.unwrap_or(self.steps / 10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhOutput {
    pub draws: Vec<Vec<f64>>,
    /// Fraction of accepted block proposals after burn-in.
    pub acceptance_rate: f64,
    pub block_acceptance: Vec<f64>,
    /// Block scales after tuning.
    pub step_scale: Vec<f64>,
}

const TUNE_WINDOW: usize = 50;

fn resolve_blocks(cfg: &McmcConfig, dim: usize) -> Result<Vec<Block>, EstimatorError> {
    let blocks = cfg.blocks.clone().unwrap_or_else(|| (0..dim).map(Block::single).collect());
    if blocks.len() != cfg.step_scale.len() {
        return Err(EstimatorError::Domain(format!(
            "{} step scales given for {} blocks",
            cfg.step_scale.len(),
            blocks.len()
        )));
    }
    for b in &blocks {
        if b.indices.is_empty() || b.indices.iter().any(|&i| i >= dim) {
            return Err(EstimatorError::Domain(format!("block {:?} does not fit dimension {dim}", b.indices)));
        }
        if let Some(l) = &b.chol {
            if l.len() != b.indices.len() || l.iter().any(|r| r.len() != b.indices.len()) {
                return Err(EstimatorError::Domain("proposal factor must be square of block size".into()));
            }
        }
    }
    Ok(blocks)
}

/// Random-walk Metropolis-within-Gibbs on `log_target`, starting at `init`.
///
/// Each iteration updates every block once with a Gaussian proposal. During
/// burn-in (when tuning is on) each block scale is shrunk or grown every 50
/// iterations until its acceptance lies in [0.2, 0.4]; it is then frozen.
pub fn rw_metropolis<F>(log_target: F, init: &[f64], cfg: &McmcConfig, seed: u64, stream: u64) -> Result<MhOutput, EstimatorError>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = init.len();
    if dim == 0 {
        return Err(EstimatorError::Domain("empty initial point".into()));
    }
    if cfg.thin == 0 || cfg.steps == 0 {
        return Err(EstimatorError::Domain("steps and thinning must be positive".into()));
    }
    let burn = cfg.burn_in_steps();
    if burn >= cfg.steps {
        return Err(EstimatorError::Domain(format!("burn-in {burn} leaves no draws out of {}", cfg.steps)));
    }
    if cfg.step_scale.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(EstimatorError::Domain("step scales must be finite and nonnegative".into()));
    }
    let blocks = resolve_blocks(cfg, dim)?;
    let mut scale = cfg.step_scale.clone();
    let mut x = init.to_vec();
    let mut lp = log_target(&x);
    if !lp.is_finite() {
        return Err(EstimatorError::NonFiniteInit(x));
    }

    let mut rng = stream_rng(seed, stream);
    let mut proposal = x.clone();
    let mut window_acc = vec![0usize; blocks.len()];
    let mut kept_acc = vec![0usize; blocks.len()];
    let mut draws = Vec::with_capacity((cfg.steps - burn) / cfg.thin + 1);
    let mut z = Vec::new();

    for it in 0..cfg.steps {
        for (bi, block) in blocks.iter().enumerate() {
            z.clear();
            z.extend((0..block.indices.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
            proposal.copy_from_slice(&x);
            for (r, &i) in block.indices.iter().enumerate() {
                let step = match &block.chol {
                    None => z[r],
                    Some(l) => (0..=r).map(|c| l[r][c] * z[c]).sum(),
                };
                proposal[i] += scale[bi] * step;
            }
            let lq = log_target(&proposal);
            let u: f64 = rng.random();
            // NaN targets are treated as rejections.
            if lq.is_finite() && u.ln() < lq - lp {
                std::mem::swap(&mut x, &mut proposal);
                lp = lq;
                window_acc[bi] += 1;
                if it >= burn {
                    kept_acc[bi] += 1;
                }
            }
        }
        if cfg.tune && it < burn && (it + 1) % TUNE_WINDOW == 0 {
            for (bi, acc) in window_acc.iter_mut().enumerate() {
                let rate = *acc as f64 / TUNE_WINDOW as f64;
                if rate < 0.2 {
                    scale[bi] *= 0.7;
                } else if rate > 0.4 {
                    scale[bi] *= 1.4;
                }
                *acc = 0;
            }
        }
        if it + 1 == burn {
            window_acc.iter_mut().for_each(|a| *a = 0);
        }
        if it >= burn && (it - burn) % cfg.thin == 0 {
            draws.push(x.clone());
        }
    }
    let kept_iters = (cfg.steps - burn) as f64;
    let block_acceptance: Vec<f64> = kept_acc.iter().map(|&a| a as f64 / kept_iters).collect();
    let acceptance_rate = block_acceptance.iter().sum::<f64>() / blocks.len() as f64;
    Ok(MhOutput { draws, acceptance_rate, block_acceptance, step_scale: scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn direct_beta_moments_and_determinism() {
        for (a, b) in [(1.0, 1.0), (3.0, 9.0)] {
            let xs = sample_direct_beta(a, b, 20_000, 11, 1).unwrap();
            let (m, _) = mean_var(&xs);
            let sd = (a * b / ((a + b).powi(2) * (a + b + 1.0))).sqrt();
            assert!((m - a / (a + b)).abs() < 3.0 * sd / (20_000f64).sqrt());
        }
        assert_eq!(sample_direct_beta(2.0, 3.0, 50, 5, 1).unwrap(), sample_direct_beta(2.0, 3.0, 50, 5, 1).unwrap());
        assert!(sample_direct_beta(0.0, 1.0, 10, 0, 0).is_err());
        assert!(sample_direct_beta(1.0, 1.0, 0, 0, 0).is_err());
    }

    #[test]
    fn metropolis_standard_normal() {
        let cfg = McmcConfig::new(55_000, vec![1.0]);
        let out = rw_metropolis(|x| -0.5 * x[0] * x[0], &[3.0], &cfg, 0, 9).unwrap();
        let xs: Vec<f64> = out.draws.iter().map(|d| d[0]).collect();
        let (m, v) = mean_var(&xs);
        assert!(m.abs() < 0.05, "{m}");
        assert!((v - 1.0).abs() < 0.1, "{v}");
        assert!(out.acceptance_rate > 0.15 && out.acceptance_rate < 0.6);
    }

    #[test]
    fn tiny_steps_accept_almost_everything() {
        let mut cfg = McmcConfig::new(2_000, vec![1e-9]);
        cfg.tune = false;
        let out = rw_metropolis(|x| -0.5 * x[0] * x[0], &[0.3], &cfg, 1, 1).unwrap();
        assert!(out.acceptance_rate > 0.99);
    }

    #[test]
    fn metropolis_matches_direct_beta_quantiles() {
        let lt = |x: &[f64]| {
            let t = x[0];
            if t <= 0.0 || t >= 1.0 {
                f64::NEG_INFINITY
            } else {
                2.0 * t.ln() + 8.0 * (-t).ln_1p()
            }
        };
        let mut cfg = McmcConfig::new(110_000, vec![0.1]);
        cfg.thin = 2;
        let mh = rw_metropolis(lt, &[0.25], &cfg, 3, 1).unwrap();
        let mut a: Vec<f64> = mh.draws.iter().map(|d| d[0]).collect();
        let mut b = sample_direct_beta(3.0, 9.0, 50_000, 3, 2).unwrap();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        // Two-sample Kolmogorov–Smirnov distance.
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        assert!(d < 0.02, "KS distance {d}");
    }

    #[test]
    fn blocks_and_preconditioning() {
        // Correlated 2-D Gaussian with an exact factor as preconditioner.
        let rho: f64 = 0.9;
        let lt = move |x: &[f64]| -(x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / (2.0 * (1.0 - rho * rho));
        let l = vec![vec![1.0, 0.0], vec![rho, (1.0 - rho * rho).sqrt()]];
        let mut cfg = McmcConfig::new(40_000, vec![1.0]);
        cfg.blocks = Some(vec![Block { indices: vec![0, 1], chol: Some(l) }]);
        let out = rw_metropolis(lt, &[0.0, 0.0], &cfg, 4, 1).unwrap();
        let n = out.draws.len() as f64;
        let cov = out.draws.iter().map(|d| d[0] * d[1]).sum::<f64>() / n;
        assert!((cov - rho).abs() < 0.08, "{cov}");
        assert!(out.acceptance_rate >= 0.15 && out.acceptance_rate <= 0.45, "{}", out.acceptance_rate);
    }

    #[test]
    fn invalid_configurations() {
        let lt = |x: &[f64]| -x[0] * x[0];
        assert!(matches!(
            rw_metropolis(|_| f64::NEG_INFINITY, &[0.0], &McmcConfig::new(10, vec![1.0]), 0, 0),
            Err(EstimatorError::NonFiniteInit(_))
        ));
        assert!(rw_metropolis(lt, &[0.0], &McmcConfig::new(10, vec![1.0, 2.0]), 0, 0).is_err());
        let mut cfg = McmcConfig::new(10, vec![1.0]);
        cfg.burn_in = Some(10);
        assert!(rw_metropolis(lt, &[0.0], &cfg, 0, 0).is_err());
    }

    #[test]
    fn burn_in_and_thinning_counts() {
        let mut cfg = McmcConfig::new(1_000, vec![1.0]);
        cfg.thin = 3;
        let out = rw_metropolis(|x| -x[0] * x[0], &[0.0], &cfg, 0, 0).unwrap();
        assert_eq!(out.draws.len(), 300);
    }
}
