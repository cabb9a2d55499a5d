//! One-predictor shrinkage regression: Monte Carlo curves against a
//! two-dimensional quadrature over (β, σ).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use bayes_geom::geometry::{compatibility, FieldKind, ScalarField};
use bayes_geom::numerics::{QuadSpec, SupportRegion};
use bayes_geom::regression::*;

fn data() -> RegressionData {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.sample(StandardNormal)]).collect();
    let y: Vec<f64> = x.iter().map(|r| 0.6 * r[0] + 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
    prepare(&y, &x).unwrap()
}

#[test]
fn single_predictor_matches_quadrature() {
    let d = data();
    let region = SupportRegion::new(vec![f64::NEG_INFINITY, 0.0], vec![f64::INFINITY, 2.0]).unwrap();
    let spec = QuadSpec::with_tolerance(1e-9, 0.0);
    let mcmc = RegressionMcmc::new(40_000, 8);
    for kind in [PriorKind::Gaussian, PriorKind::Laplace] {
        for lambda_sq in [0.05, 0.5, 5.0] {
            let cfg = ShrinkageConfig::new(kind, lambda_sq);
            let field = |f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>| {
                ScalarField::unchecked(f, region.clone(), FieldKind::Generic)
            };
            let (c1, c2, d1, d2) = (cfg.clone(), cfg.clone(), d.clone(), d.clone());
            let prior = field(Box::new(move |t| c1.log_prior_beta(&t[..1]) + c1.log_prior_sigma(t[1])));
            let lik = field(Box::new(move |t| log_likelihood(&d1, &t[..1], t[1])));
            let post = field(Box::new(move |t| log_posterior(&d2, &c2, &t[..1], t[1])));
            let table = kappa_curves(&d, &[lambda_sq], &[kind], &mcmc).unwrap();
            for (metric, g, h) in
                [("kappa_pi_lik_local", &prior, &lik), ("kappa_pi_p", &prior, &post), ("kappa_lik_p_local", &lik, &post)]
            {
                let exact = compatibility(g, h, &spec).unwrap().kappa;
                let row = table.get(lambda_sq, kind.as_str(), metric).unwrap();
                let tol = 4.0 * row.mc_se + 1e-4;
                assert!(
                    (row.estimate - exact).abs() <= tol,
                    "{} λ² = {lambda_sq} {metric}: {} ± {} vs {exact}",
                    kind.as_str(),
                    row.estimate,
                    row.mc_se
                );
            }
        }
    }
}
