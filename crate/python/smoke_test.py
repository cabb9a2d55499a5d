"""Smoke test for the bayes_geom Python extension."""

import json
import math

import bayes_geom as bg


def close(got, want, tol):
    assert abs(got - want) <= tol, f"{got} vs {want} (tolerance {tol})"


def main():
    m = bg.BetaBernoulli(3.44, 22.99, 10, 2)
    close(m.prior_norm(), 2.17, 0.005)
    close(m.kappa_prior_lik(), 0.69, 0.01)
    close(m.kappa_prior_post(), 0.95, 0.01)
    kpl, kpp, _ = m.quadrature_kappas()
    close(kpl, m.kappa_prior_lik(), 1e-8)
    close(kpp, m.kappa_prior_post(), 1e-8)
    a_post, b_post = m.posterior_params()
    close(a_post, 5.44, 1e-12)
    close(b_post, 30.99, 1e-12)

    trace = bg.BetaBernoulli(2, 1, 10, 2).trace("stable", 10_000, seed=7)
    assert trace[-1][0] == 10_000
    close(trace[-1][1], bg.BetaBernoulli(2, 1, 10, 2).kappa_prior_post(), 0.01)
    assert trace == bg.BetaBernoulli(2, 1, 10, 2).trace("stable", 10_000, seed=7)

    prior = bg.Nig(1.9, 1.0, 1.0, 0.01)
    post = prior.posterior(9, 1.804, 0.135)
    close(prior.kappa(post), 0.28, 0.01)
    close(prior.kappa(post), post.kappa(prior), 1e-12)

    assert bg.max_compatible(10, 2) == (3.0, 9.0)
    close(bg.normal_kappa(0.0, 1.0, 1.0, 1.0), math.exp(-0.25), 1e-8)
    close(bg.kappa_prior_prior(2, 3, 2, 3), 1.0, 1e-12)
    # Beta(2, 8) prior in the natural parameter; data with 2 successes in 5.
    close(
        bg.expfam_kappa("bernoulli-canonical", [2.0], 10.0, [0, 1, 0, 0, 1], "prior_post", affine=True),
        bg.beta_affinity(2, 8, 4, 11),
        1e-8,
    )
    close(bg.beta_affinity(2, 3, 2, 3), 1.0, 1e-12)

    report = json.loads(bg.run_config('{"command": "beta-binomial", "a": 3.44, "b": 22.99, "n": 10, "n1": 2}'))
    values = {v["name"]: v["value"] for v in report["values"]}
    close(values["kappa_prior_lik"], m.kappa_prior_lik(), 0.0)

    for bad in [lambda: bg.BetaBernoulli(0.5, 2, 10, 2), lambda: bg.run_config('{"command": "nope"}')]:
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
