use proptest::prelude::*;

use bayes_geom::conjugate::*;
use bayes_geom::estimators::{beta_bernoulli_batch, kappa_pp_stable, postmean_suite, PostMeanTarget};
use bayes_geom::geometry::*;
use bayes_geom::numerics::{log_beta, QuadSpec, SupportRegion};

fn q() -> QuadSpec {
    QuadSpec::default()
}

fn nig() -> impl Strategy<Value = NigParams> {
    (-2.0..2.0f64, 0.2..5.0f64, 0.5..8.0f64, 0.1..3.0f64)
        .prop_map(|(m, e, n, s)| NigParams::new(m, e, n, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kappa_lies_in_unit_interval(a1 in 0.6..20.0f64, b1 in 0.6..20.0f64, a2 in 0.6..20.0f64, b2 in 0.6..20.0f64) {
        let k = bb_kappa_prior_prior(a1, b1, a2, b2).unwrap();
        prop_assert!((0.0..=1.0).contains(&k));
        let s = bb_kappa_prior_prior(a2, b2, a1, b1).unwrap();
        prop_assert!((k - s).abs() < 1e-13);
        let own = bb_kappa_prior_prior(a1, b1, a1, b1).unwrap();
        prop_assert!((own - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cauchy_schwarz_by_quadrature(a1 in 0.8..12.0f64, b1 in 0.8..12.0f64, a2 in 0.8..12.0f64, b2 in 0.8..12.0f64) {
        let (f, g) = (ScalarField::beta(a1, b1).unwrap(), ScalarField::beta(a2, b2).unwrap());
        let ip = inner_product(&f, &g, &q()).unwrap();
        let bound = norm(&f, &q()).unwrap() * norm(&g, &q()).unwrap();
        prop_assert!(ip <= bound * (1.0 + 1e-10));
        let s = compatibility(&f, &g, &q()).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.kappa) && (0.0..=90.0).contains(&s.angle_deg));
    }

    #[test]
    fn kappa_is_scale_invariant(a in 0.8..10.0f64, b in 0.8..10.0f64, m in 0.6..10.0f64, c in -30.0..30.0f64) {
        let f = ScalarField::beta(a, b).unwrap();
        let g = ScalarField::beta(m, m).unwrap();
        let k = compatibility(&f, &g, &q()).unwrap().kappa;
        let kc = compatibility(&f.scaled(c.exp()), &g, &q()).unwrap().kappa;
        prop_assert!((k - kc).abs() < 1e-9 * k.max(1e-300), "{k} vs {kc}");
        let ac = affine_compatibility(&f.scaled(c.exp()), &g.scaled((-c).exp()), &q()).unwrap();
        let a0 = affine_compatibility(&f, &g, &q()).unwrap();
        prop_assert!((ac - a0).abs() < 1e-9);
    }

    #[test]
    fn affine_kappa_is_reparametrization_invariant(a1 in 0.5..8.0f64, b1 in 0.5..8.0f64, a2 in 0.5..8.0f64, b2 in 0.5..8.0f64) {
        // θ = 1/(1 + e^{-η}) with Jacobian θ(1-θ).
        let logit_beta = |a: f64, b: f64| ScalarField::unchecked(
            move |x| {
                let e = x[0];
                let lt = -(-e).exp().ln_1p();
                let l1t = -e.exp().ln_1p();
                a * lt + b * l1t - log_beta(a, b).unwrap()
            },
            SupportRegion::real_line(),
            FieldKind::Prior,
        );
        let direct = affine_compatibility(&ScalarField::beta(a1, b1).unwrap(), &ScalarField::beta(a2, b2).unwrap(), &q());
        let mapped = affine_compatibility(&logit_beta(a1, b1), &logit_beta(a2, b2), &q()).unwrap();
        let exact = beta_affinity(a1, b1, a2, b2).unwrap();
        prop_assert!((mapped - exact).abs() < 1e-8, "{mapped} vs {exact}");
        if let Ok(d) = direct {
            prop_assert!((d - exact).abs() < 1e-6, "{d} vs {exact}");
        }
    }

    #[test]
    fn nig_kappa_is_symmetric(p1 in nig(), p2 in nig()) {
        let k12 = nig_kappa(&p1, &p2).unwrap();
        let k21 = nig_kappa(&p2, &p1).unwrap();
        prop_assert!((k12 - k21).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&k12));
        prop_assert!((nig_kappa(&p1, &p1).unwrap() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn estimates_are_deterministic(a in 0.6..10.0f64, b in 0.6..10.0f64, n1 in 0u64..=10, seed in any::<u64>()) {
        let m = BetaBernoulliModel::new(a, b, 10, n1).unwrap();
        let s1 = beta_bernoulli_batch(&m, 2000, 2000, seed).unwrap();
        let s2 = beta_bernoulli_batch(&m, 2000, 2000, seed).unwrap();
        prop_assert_eq!(&s1.posterior_draws, &s2.posterior_draws);
        let t1 = kappa_pp_stable(&s1, 100).unwrap();
        let t2 = kappa_pp_stable(&s2, 100).unwrap();
        prop_assert_eq!(t1.estimates, t2.estimates);
        let r1 = postmean_suite(&s1, &PostMeanTarget::ALL[..3]);
        let r2 = postmean_suite(&s2, &PostMeanTarget::ALL[..3]);
        prop_assert_eq!(r1.to_json(), r2.to_json());
    }
}
