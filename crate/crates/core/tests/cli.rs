use std::path::Path;
use std::process::{Command, Output};

use bayes_geom::cli::{run, Artifact, CliError, Overrides, RunConfig, TRACE_HEADER};
use bayes_geom::report::CompatReport;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayes-geom")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const BB: &str = r#"{"command": "beta-binomial", "a": 3.44, "b": 22.99, "n": 10, "n1": 2}"#;

#[test]
fn beta_binomial_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bb.json", BB);
    let out = dir.path().join("report.json");
    let o = bin(&["--config", &cfg, "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let r = CompatReport::from_json(&text).unwrap();
    assert!((r.value("kappa_prior_lik").unwrap() - 0.69).abs() < 0.01);
    assert!((r.value("kappa_prior_post").unwrap() - 0.95).abs() < 0.01);
    assert_eq!(r.to_json(), text.trim_end());
    let again = CompatReport::from_json(&r.to_json()).unwrap();
    for (x, y) in r.values.iter().zip(&again.values) {
        assert_eq!(x.value.map(f64::to_bits), y.value.map(f64::to_bits), "{}", x.name);
    }
}

#[test]
fn stdout_when_no_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bb.json", BB);
    let o = bin(&["--config", &cfg]);
    assert!(o.status.success());
    let r = CompatReport::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert!(r.value("prior_norm").is_some());
}

#[test]
fn norm_domain_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    for (a, b) in [(0.5, 2.0), (2.0, 0.3)] {
        let cfg = write(
            dir.path(),
            "bad.json",
            &format!(r#"{{"command": "beta-binomial", "a": {a}, "b": {b}, "n": 10, "n1": 2}}"#),
        );
        let o = bin(&["--config", &cfg]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("L2 norm"), "{}", stderr(&o));
    }
}

#[test]
fn nig_midge() {
    let cfg = RunConfig::from_json(
        r#"{"command": "nig", "mu0": 1.9, "eta0": 1, "nu0": 1, "sigma0sq": 0.01,
            "n": 9, "ybar": 1.804, "ss": 0.135}"#,
    )
    .unwrap();
    let Artifact::Report(r) = run(cfg, &Overrides::default()).unwrap().artifact else { panic!("report expected") };
    assert!((r.value("kappa_prior_post").unwrap() - 0.28).abs() < 0.01);
}

#[test]
fn sweep_csv_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"command": "sweep", "model": "beta-binomial", "params": {"n": 10, "n1": 2},
            "metrics": ["kappa_prior_lik"],
            "grid": {"axes": [{"parameter": "a", "min": 0.6, "max": 12, "points": 60},
                              {"parameter": "b", "min": 0.6, "max": 12, "points": 60}]}}"#,
    );
    let out = dir.path().join("sweep.csv");
    let o = bin(&["--config", &cfg, "--output", out.to_str().unwrap(), "--threads", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let head = rdr.headers().unwrap().clone();
    let col = |n: &str| head.iter().position(|h| h == n).unwrap();
    let (ia, ib, ik) = (col("a"), col("b"), col("kappa_prior_lik"));
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        rows += 1;
        let Ok(k) = rec[ik].parse::<f64>() else { continue };
        if k > best.2 {
            best = (rec[ia].parse().unwrap(), rec[ib].parse().unwrap(), k);
        }
    }
    assert_eq!(rows, 3600);
    // Spacing 11.4/59; the grid does not contain (3, 9) itself.
    let h = 11.4 / 59.0;
    assert!((best.0 - 3.0f64).abs() < 2.0 * h && (best.1 - 9.0f64).abs() < 2.0 * h, "{best:?}");

    let single = dir.path().join("single.csv");
    let o = bin(&["--config", &cfg, "--output", single.to_str().unwrap(), "--threads", "1"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&single).unwrap());
}

const TRACE: &str = r#"{"command": "estimate", "mode": "trace", "priors": [[1, 1], [2, 1], [10, 1]],
    "n": 10, "n1": 2, "mcmc": {"draws": 10000, "seed": 11, "record_every": 100}}"#;

#[test]
fn trace_panels_with_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "trace.json", TRACE);
    let out = dir.path().join("trace.csv");
    let o = bin(&["--config", &cfg, "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some(TRACE_HEADER));
    let rows: Vec<(f64, f64, String, Vec<f64>)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let nums = [f[3], f[4], f[5]].iter().map(|v| v.parse().unwrap()).collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].to_string(), nums)
        })
        .collect();
    for (a, b) in [(1.0, 1.0), (2.0, 1.0), (10.0, 1.0)] {
        for est in ["harmonic", "stable"] {
            let panel: Vec<&Vec<f64>> =
                rows.iter().filter(|r| r.0 == a && r.1 == b && r.2 == est).map(|r| &r.3).collect();
            assert_eq!(panel.len(), 100, "({a}, {b}) {est}");
            let last = panel.last().unwrap();
            assert_eq!(last[0], 10_000.0);
            if est == "stable" {
                assert!((last[1] - last[2]).abs() < 0.01, "({a}, {b}): {} vs {}", last[1], last[2]);
            }
        }
    }

    let again = dir.path().join("again.csv");
    let o = bin(&["--config", &cfg, "--output", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());

    let other = dir.path().join("other.csv");
    let o = bin(&["--config", &cfg, "--output", other.to_str().unwrap(), "--seed", "12"]);
    assert!(o.status.success());
    assert_ne!(text, std::fs::read_to_string(&other).unwrap());
}

#[test]
fn seed_is_mandatory_for_monte_carlo() {
    let cfg = RunConfig::from_json(r#"{"command": "estimate", "priors": [[1, 1]], "n": 10, "n1": 2}"#).unwrap();
    let e = run(cfg.clone(), &Overrides::default()).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("seed"));
    let ov = Overrides { seed: Some(3), ..Overrides::default() };
    assert!(run(cfg, &ov).is_ok());
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"command": "frobnicate"}"#, "frobnicate"),
        (
            r#"{"command": "sweep", "model": "beta-binomial", "params": {"n": 10, "n1": 2},
                "grid": {"axes": [{"parameter": "c", "min": 1, "max": 2, "points": 3}]}}"#,
            "'c'",
        ),
        (
            r#"{"command": "sweep", "model": "beta-binomial", "params": {"n": 10, "n1": 2},
                "grid": {"axes": [{"parameter": "a", "min": 2, "max": 1, "points": 3}]}}"#,
            "grid axis 'a'",
        ),
        (
            r#"{"command": "sweep", "model": "beta-binomial", "params": {"n": 10, "n1": 2},
                "grid": {"axes": [{"parameter": "a", "min": 0, "max": 1, "points": 3, "scale": "log"}]}}"#,
            "grid axis 'a'",
        ),
        ("not json", "invalid config"),
    ];
    for (text, needle) in cases {
        let cfg = write(dir.path(), "c.json", text);
        let o = bin(&["--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
    }
    let o = bin(&["--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bb.json", BB);
    for out in [dir.path().join("no/such/dir/r.json"), dir.path().to_path_buf()] {
        let o = bin(&["--config", &cfg, "--output", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{}", out.display());
    }
}

#[test]
fn numerical_failures_exit_3() {
    let e = CliError::Numerical { term: "kappa_pi_p".into(), detail: "zero norm".into() };
    assert_eq!(e.exit_code(), 3);
    assert!(e.to_string().contains("kappa_pi_p"));
}

#[test]
fn draws_export_and_import() {
    let dir = tempfile::tempdir().unwrap();
    let post = dir.path().join("post.csv");
    let prior = dir.path().join("prior.csv");
    let cfg = format!(
        r#"{{"command": "estimate", "mode": "suite", "priors": [[2, 3]], "n": 10, "n1": 2,
            "export_posterior": {:?}, "export_prior": {:?},
            "mcmc": {{"draws": 4000, "prior_draws": 4000, "seed": 5}}}}"#,
        post, prior
    );
    let first = run(RunConfig::from_json(&cfg).unwrap(), &Overrides::default()).unwrap();
    assert!(post.exists() && prior.exists());
    let (names, draws) = bayes_geom::estimators::read_draws_csv_path(&post).unwrap();
    assert_eq!(names, ["theta"]);
    assert_eq!(draws.len(), 4000);

    let cfg = format!(
        r#"{{"command": "estimate", "mode": "suite", "priors": [[2, 3]], "n": 10, "n1": 2,
            "posterior_samples": {:?}, "prior_samples": {:?}, "mcmc": {{"seed": 99}}}}"#,
        post, prior
    );
    let second = run(RunConfig::from_json(&cfg).unwrap(), &Overrides::default()).unwrap();
    let val = |o: &bayes_geom::cli::RunOutcome, name: &str| match &o.artifact {
        Artifact::Report(r) => r.value(name).unwrap(),
        Artifact::Table { .. } => panic!("one prior setting gives a report"),
    };
    for name in ["norm_p", "norm_pi", "kappa_pi_p"] {
        assert_eq!(val(&first, name).to_bits(), val(&second, name).to_bits(), "{name}");
    }
}
