//! Execution of each command. Every function returns an [`Artifact`] and
//! leaves writing to the caller.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::*;
use super::CliError;
use crate::conjugate::{
    bb_kappa_prior_lik, bb_kappa_prior_post, bb_kappa_prior_prior, bb_likelihood_norm, bb_max_compatible,
    bb_posterior_norm, bb_prior_norm, nig_kappa, nig_likelihood_as_nig, nig_norm, nig_posterior, BetaBernoulliModel,
    ConjugateError, NigParams,
};
use crate::estimators::{
    beta_bernoulli_batch, kappa_pp_harmonic, kappa_pp_stable, postmean_suite, read_draws_csv_path,
    with_beta_alt_prior, write_draws_csv_path, PostMeanTarget, RunningTrace, SampleBatch, SamplingMethod,
};
use crate::expfam::{ef_affine_kappa, ef_kappa, ef_max_compatible, ConjugateHyper, ExpFamSpec, KappaPair};
use crate::numerics::QuadSpec;
use crate::regression::{
    kappa_curves, load_table, prior_norm_shrinkage, prior_prior_csv, prior_prior_curve, synthetic_fixture,
    RegressionData, RegressionMcmc,
};
use crate::report::{fmt_num, CompatReport, NamedValue};

/// What a command produced.
#[derive(Debug, Clone)]
pub enum Artifact {
    Report(CompatReport),
    /// A table with a CSV rendering and a JSON rendering.
    Table { csv: String, json: Value, warnings: Vec<String> },
}

impl Artifact {
    pub fn warnings(&self) -> &[String] {
        match self {
            Artifact::Report(r) => &r.warnings,
            Artifact::Table { warnings, .. } => warnings,
        }
    }
}

const DEFAULT_DRAWS: usize = 10_000;
const DEFAULT_CHAIN: usize = 20_000;

fn deg(kappa: f64) -> f64 {
    kappa.clamp(-1.0, 1.0).acos().to_degrees()
}

fn validation(e: impl ToString) -> CliError {
    CliError::Validation(e.to_string())
}

fn push_result(r: &mut CompatReport, name: &str, v: Result<f64, impl ToString>) {
    match v {
        Ok(x) => r.push(NamedValue::exact(name, x)),
        Err(e) => r.push(NamedValue::failed(name, e)),
    };
}

pub fn beta_binomial(c: &BetaBinomialCmd) -> Result<Artifact, CliError> {
    let m = BetaBernoulliModel::new(c.a, c.b, c.n, c.n1).map_err(validation)?;
    let mut r = CompatReport::new("beta-binomial", "closed-form");
    r.meta("a", m.a).meta("b", m.b).meta("n", m.n).meta("n1", m.n1);
    r.meta("posterior_a", m.a_post()).meta("posterior_b", m.b_post());
    push_result(&mut r, "prior_norm", bb_prior_norm(&m));
    push_result(&mut r, "posterior_norm", bb_posterior_norm(&m));
    push_result(&mut r, "likelihood_norm", bb_likelihood_norm(&m));
    let k_pl = bb_kappa_prior_lik(&m);
    let k_pp = bb_kappa_prior_post(&m);
    let k_ql = bb_kappa_post_lik(&m);
    push_result(&mut r, "kappa_prior_lik", k_pl.clone());
    push_result(&mut r, "kappa_prior_post", k_pp.clone());
    push_result(&mut r, "kappa_post_lik", k_ql.clone());
    push_result(&mut r, "angle_prior_lik_deg", k_pl.map(deg));
    push_result(&mut r, "angle_prior_post_deg", k_pp.map(deg));
    push_result(&mut r, "angle_post_lik_deg", k_ql.map(deg));
    match bb_max_compatible(m.n, m.n1) {
        Ok((a, b)) => {
            r.push_exact("max_compatible_a", a).push_exact("max_compatible_b", b);
        }
        Err(e) => {
            r.push(NamedValue::failed("max_compatible_a", &e)).push(NamedValue::failed("max_compatible_b", e));
        }
    }
    Ok(Artifact::Report(r))
}

/// The likelihood is proportional to a Beta(n1 + 1, n − n1 + 1) density.
fn bb_kappa_post_lik(m: &BetaBernoulliModel) -> Result<f64, ConjugateError> {
    bb_kappa_prior_prior(m.a_post(), m.b_post(), m.n1 as f64 + 1.0, m.n0() as f64 + 1.0)
}

fn nig_params(c: &NigCmd) -> Result<NigParams, CliError> {
    if !(c.ss >= 0.0) || !c.ybar.is_finite() {
        return Err(validation(format!("need finite ybar and ss >= 0, got ybar = {}, ss = {}", c.ybar, c.ss)));
    }
    if c.n == 0 {
        return Err(validation("nig needs n >= 1"));
    }
    NigParams::new(c.mu0, c.eta0, c.nu0, c.sigma0sq).map_err(validation)
}

pub fn nig(c: &NigCmd) -> Result<Artifact, CliError> {
    let prior = nig_params(c)?;
    let mut r = CompatReport::new("nig", "closed-form");
    r.meta("prior", prior).meta("n", c.n).meta("ybar", c.ybar).meta("ss", c.ss);
    let post = match nig_posterior(&prior, c.n, c.ybar, c.ss) {
        Ok(p) => p,
        Err(e) => return Err(CliError::Numerical { term: "posterior".into(), detail: e.to_string() }),
    };
    r.meta("posterior", post);
    push_result(&mut r, "prior_norm", nig_norm(&prior));
    push_result(&mut r, "posterior_norm", nig_norm(&post));
    let k_pp = nig_kappa(&prior, &post);
    push_result(&mut r, "kappa_prior_post", k_pp.clone());
    push_result(&mut r, "angle_prior_post_deg", k_pp.map(deg));
    match nig_likelihood_as_nig(c.n, c.ybar, c.ss) {
        Ok(lik) => {
            r.meta("likelihood_as_nig", lik);
            push_result(&mut r, "likelihood_norm_normalized", nig_norm(&lik));
            push_result(&mut r, "kappa_prior_lik", nig_kappa(&prior, &lik));
            push_result(&mut r, "kappa_post_lik", nig_kappa(&post, &lik));
        }
        Err(e) => {
            r.warn(format!("likelihood terms skipped: {e}"));
        }
    }
    Ok(Artifact::Report(r))
}

pub fn expfam(c: &ExpfamCmd) -> Result<Artifact, CliError> {
    let spec = match c.family.as_str() {
        "normal-known-variance" => ExpFamSpec::normal_known_variance(c.sigmasq.unwrap_or(1.0)).map_err(validation)?,
        name => {
            if c.sigmasq.is_some() {
                return Err(validation(format!("sigmasq does not apply to family '{name}'")));
            }
            ExpFamSpec::by_name(name).map_err(validation)?
        }
    };
    let quad = QuadSpec::default();
    let h = ConjugateHyper::new(&spec, c.tau.clone(), c.n0, &quad).map_err(validation)?;
    spec.sufficient(&c.data).map_err(validation)?;
    let mut r = CompatReport::new("expfam", "quadrature");
    r.meta("family", &spec.name).meta("tau", &h.tau).meta("n0", h.n0).meta("data_count", c.data.len());
    if let Ok(post) = h.posterior(&spec, &c.data) {
        r.meta("posterior_tau", &post.tau).meta("posterior_n0", post.n0);
    }
    for which in KappaPair::ALL {
        push_result(&mut r, &format!("kappa_{}", which.as_str()), ef_kappa(&spec, &h, &c.data, which, &quad));
    }
    for which in KappaPair::ALL {
        push_result(
            &mut r,
            &format!("affine_kappa_{}", which.as_str()),
            ef_affine_kappa(&spec, &h, &c.data, which, &quad),
        );
    }
    match ef_max_compatible(&spec, &c.data, &quad) {
        Ok(best) => {
            for (i, t) in best.tau.iter().enumerate() {
                r.push_exact(&format!("max_compatible_tau_{i}"), *t);
            }
            r.push_exact("max_compatible_n0", best.n0);
        }
        Err(e) => {
            r.warn(format!("no max-compatible member: {e}"));
        }
    }
    Ok(Artifact::Report(r))
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

fn model_metrics(model: SweepModel) -> &'static [&'static str] {
    match model {
        SweepModel::BetaBinomial => &[
            "prior_norm",
            "posterior_norm",
            "likelihood_norm",
            "kappa_prior_lik",
            "kappa_prior_post",
            "kappa_post_lik",
        ],
        SweepModel::Nig => &["prior_norm", "posterior_norm", "kappa_prior_post", "kappa_prior_lik", "kappa_post_lik"],
    }
}

fn count(name: &str, v: f64) -> Result<u64, String> {
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) {
        Ok(v as u64)
    } else {
        Err(format!("{name} = {v} must be a non-negative integer"))
    }
}

/// Every metric at one parameter point, or the reason the point is outside
/// the model's domain.
fn sweep_cell(model: SweepModel, p: &BTreeMap<String, f64>, metrics: &[String]) -> Result<Vec<f64>, String> {
    let get = |k: &str| p[k];
    let values: Vec<Result<f64, ConjugateError>> = match model {
        SweepModel::BetaBinomial => {
            let m = BetaBernoulliModel::new(get("a"), get("b"), count("n", get("n"))?, count("n1", get("n1"))?)
                .map_err(|e| e.to_string())?;
            metrics
                .iter()
                .map(|name| match name.as_str() {
                    "prior_norm" => bb_prior_norm(&m),
                    "posterior_norm" => bb_posterior_norm(&m),
                    "likelihood_norm" => bb_likelihood_norm(&m),
                    "kappa_prior_lik" => bb_kappa_prior_lik(&m),
                    "kappa_prior_post" => bb_kappa_prior_post(&m),
                    _ => bb_kappa_post_lik(&m),
                })
                .collect()
        }
        SweepModel::Nig => {
            let n = count("n", get("n"))?;
            let prior = NigParams::new(get("mu0"), get("eta0"), get("nu0"), get("sigma0sq")).map_err(|e| e.to_string())?;
            let post = nig_posterior(&prior, n, get("ybar"), get("ss")).map_err(|e| e.to_string())?;
            let lik = nig_likelihood_as_nig(n, get("ybar"), get("ss"));
            metrics
                .iter()
                .map(|name| match name.as_str() {
                    "prior_norm" => nig_norm(&prior),
                    "posterior_norm" => nig_norm(&post),
                    "kappa_prior_post" => nig_kappa(&prior, &post),
                    "kappa_prior_lik" => lik.clone().and_then(|l| nig_kappa(&prior, &l)),
                    _ => lik.clone().and_then(|l| nig_kappa(&post, &l)),
                })
                .collect()
        }
    };
    values.into_iter().map(|v| v.map_err(|e| e.to_string())).collect()
}

/// Closed-form metrics over the Cartesian product of the grid axes. The
/// first axis varies slowest; cells outside the model's domain are written
/// as NaN and listed in the warnings.
pub fn sweep(
    model: SweepModel,
    base: &BTreeMap<String, f64>,
    grid: &GridSpec,
    metrics: &[String],
) -> Result<Artifact, CliError> {
    let known = model_metrics(model);
    let metrics: Vec<String> =
        if metrics.is_empty() { known.iter().map(|s| s.to_string()).collect() } else { metrics.to_vec() };
    if let Some(bad) = metrics.iter().find(|m| !known.contains(&m.as_str())) {
        return Err(validation(format!("unknown metric '{bad}' for {} (known: {})", model.as_str(), known.join(", "))));
    }
    let swept: Vec<&str> = grid.axes.iter().map(|a| a.parameter.as_str()).collect();
    let missing: Vec<&str> =
        model.parameters().iter().copied().filter(|p| !swept.contains(p) && !base.contains_key(*p)).collect();
    if !missing.is_empty() {
        return Err(validation(format!("parameters {} need a value or a grid axis", missing.join(", "))));
    }
    let axes: Vec<Vec<f64>> = grid.axes.iter().map(Axis::values).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let cells: Vec<(Vec<f64>, Result<Vec<f64>, String>)> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut coords = vec![0.0; axes.len()];
            for d in (0..axes.len()).rev() {
                coords[d] = axes[d][idx % axes[d].len()];
                idx /= axes[d].len();
            }
            let mut point = base.clone();
            for (name, v) in swept.iter().zip(&coords) {
                point.insert(name.to_string(), *v);
            }
            let r = sweep_cell(model, &point, &metrics);
            (coords, r)
        })
        .collect();

    let params = model.parameters();
    let mut header: Vec<String> = params.iter().map(|s| s.to_string()).collect();
    header.extend(metrics.iter().cloned());
    let mut csv = header.join(",");
    csv.push('\n');
    let mut rows = Vec::with_capacity(total);
    let (mut outside, mut first_outside) = (0usize, String::new());
    for (coords, r) in cells {
        let mut point = base.clone();
        for (name, v) in swept.iter().zip(&coords) {
            point.insert(name.to_string(), *v);
        }
        let mut row: Vec<f64> = params.iter().map(|p| point[*p]).collect();
        match r {
            Ok(vals) => row.extend(vals),
            Err(e) => {
                if outside == 0 {
                    let at: Vec<String> = swept.iter().zip(&coords).map(|(n, v)| format!("{n} = {v}")).collect();
                    first_outside = format!("{}: {e}", at.join(", "));
                }
                outside += 1;
                row.extend(std::iter::repeat_n(f64::NAN, metrics.len()));
            }
        }
        csv.push_str(&row.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(","));
        csv.push('\n');
        rows.push(row.into_iter().map(|v| if v.is_finite() { json!(v) } else { Value::Null }).collect::<Vec<_>>());
    }
    let mut warnings = Vec::new();
    if outside > 0 {
        warnings.push(format!(
            "{outside} of {total} cells are outside the model's domain and were written as NaN (first: {first_outside})"
        ));
    }
    let json = json!({ "model": model.as_str(), "columns": header, "rows": rows, "warnings": warnings });
    Ok(Artifact::Table { csv, json, warnings })
}

// ---------------------------------------------------------------------------
// Monte Carlo estimation
// ---------------------------------------------------------------------------

fn read_single_column(path: &std::path::Path) -> Result<Vec<Vec<f64>>, CliError> {
    let (names, draws) = read_draws_csv_path(path).map_err(validation)?;
    if names.len() != 1 {
        return Err(validation(format!("{}: expected one column (theta), found {}", path.display(), names.len())));
    }
    if draws.is_empty() {
        return Err(validation(format!("{}: no draws", path.display())));
    }
    Ok(draws)
}

fn estimate_batch(c: &EstimateCmd, m: &BetaBernoulliModel, mcmc: &McmcSettings, seed: u64) -> Result<SampleBatch, CliError> {
    let draws = mcmc.draws.unwrap_or(DEFAULT_DRAWS);
    let prior_draws = mcmc.prior_draws.unwrap_or(draws);
    let mut s = beta_bernoulli_batch(m, draws, prior_draws, seed).map_err(validation)?;
    if let Some(path) = &c.posterior_samples {
        s.posterior_draws = read_single_column(path)?;
        s.method = SamplingMethod::Imported;
    }
    if let Some(path) = &c.prior_samples {
        s.prior_draws = read_single_column(path)?;
    }
    if let Some([a2, b2]) = c.second_prior {
        BetaBernoulliModel::new(a2, b2, 0, 0).map_err(validation)?;
        s = with_beta_alt_prior(s, a2, b2, prior_draws).map_err(validation)?;
    }
    Ok(s)
}

fn export(c: &EstimateCmd, s: &SampleBatch) -> Result<(), CliError> {
    let names = vec!["theta".to_string()];
    if let Some(p) = &c.export_posterior {
        write_draws_csv_path(p, &names, &s.posterior_draws).map_err(|e| CliError::Io(e.to_string()))?;
    }
    if let Some(p) = &c.export_prior {
        write_draws_csv_path(p, &names, &s.prior_draws).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

pub const TRACE_HEADER: &str = "prior_a,prior_b,estimator,draws,estimate,reference";

/// Running traces for every prior setting and estimator, with the
/// closed-form prior–posterior compatibility as reference.
pub fn estimate(c: &EstimateCmd, mcmc: &McmcSettings) -> Result<Artifact, CliError> {
    let seed = mcmc.seed.ok_or_else(|| validation("estimate needs a seed"))?;
    let models: Vec<BetaBernoulliModel> = c
        .priors
        .iter()
        .map(|[a, b]| BetaBernoulliModel::new(*a, *b, c.n, c.n1).map_err(validation))
        .collect::<Result<_, _>>()?;
    let targets: Vec<PostMeanTarget> = if c.targets.is_empty() {
        let mut all = PostMeanTarget::ALL.to_vec();
        if c.second_prior.is_none() {
            all.retain(|t| *t != PostMeanTarget::KappaPi1Pi2);
        }
        all
    } else {
        c.targets
            .iter()
            .map(|t| PostMeanTarget::parse(t).ok_or_else(|| validation(format!("unknown target '{t}'"))))
            .collect::<Result<_, _>>()?
    };
    let mut batches = Vec::with_capacity(models.len());
    for m in &models {
        batches.push(estimate_batch(c, m, mcmc, seed)?);
    }
    export(c, &batches[0])?;

    match c.mode {
        EstimateMode::Trace => {
            let draws = batches[0].posterior_draws.len();
            let every = mcmc.record_every.unwrap_or((draws / 1000).max(1));
            let mut csv = format!("{TRACE_HEADER}\n");
            let mut traces = Vec::new();
            let mut warnings = Vec::new();
            for (m, s) in models.iter().zip(&batches) {
                let reference = bb_kappa_prior_post(m).map_err(validation)?;
                for est in &c.estimators {
                    let tr: RunningTrace = match est {
                        TraceEstimator::Harmonic => kappa_pp_harmonic(s, every),
                        TraceEstimator::Stable => kappa_pp_stable(s, every),
                    }
                    .map_err(|e| CliError::Numerical {
                        term: format!("{} trace for ({}, {})", est.as_str(), m.a, m.b),
                        detail: e.to_string(),
                    })?;
                    if tr.flagged {
                        warnings.push(format!(
                            "{} trace for ({}, {}): {} draws with zero likelihood were excluded",
                            est.as_str(),
                            m.a,
                            m.b,
                            tr.excluded_draws
                        ));
                    }
                    for (b, v) in &tr.estimates {
                        csv.push_str(&format!(
                            "{},{},{},{b},{},{}\n",
                            fmt_num(m.a),
                            fmt_num(m.b),
                            est.as_str(),
                            fmt_num(*v),
                            fmt_num(reference)
                        ));
                    }
                    traces.push(json!({
                        "prior_a": m.a,
                        "prior_b": m.b,
                        "estimator": est.as_str(),
                        "reference": reference,
                        "excluded_draws": tr.excluded_draws,
                        "flagged": tr.flagged,
                        "estimates": tr.estimates.iter()
                            .map(|(b, v)| json!([b, if v.is_finite() { json!(v) } else { Value::Null }]))
                            .collect::<Vec<_>>(),
                    }));
                }
            }
            let json = json!({ "seed": seed, "n": c.n, "n1": c.n1, "traces": traces, "warnings": warnings });
            Ok(Artifact::Table { csv, json, warnings })
        }
        EstimateMode::Suite => {
            let mut reports = Vec::new();
            for (m, s) in models.iter().zip(&batches) {
                let mut r = postmean_suite(s, &targets);
                let mut reference = BTreeMap::new();
                let exact: [(&str, Result<f64, ConjugateError>); 5] = [
                    ("norm_p", bb_posterior_norm(m)),
                    ("norm_pi", bb_prior_norm(m)),
                    ("norm_lik_local", bb_likelihood_norm(m)),
                    ("kappa_pi_lik_local", bb_kappa_prior_lik(m)),
                    ("kappa_pi_p", bb_kappa_prior_post(m)),
                ];
                for (name, v) in exact {
                    if let Ok(v) = v {
                        reference.insert(name.to_string(), v);
                    }
                }
                if let Ok(v) = bb_kappa_post_lik(m) {
                    reference.insert("kappa_lik_p_local".into(), v);
                }
                if let Some([a2, b2]) = c.second_prior {
                    if let Ok(v) = bb_kappa_prior_prior(m.a, m.b, a2, b2) {
                        reference.insert("kappa_pi1_pi2".into(), v);
                    }
                }
                r.kind = "beta-binomial-estimate".into();
                r.meta("a", m.a).meta("b", m.b).meta("n", m.n).meta("n1", m.n1).meta("reference", reference);
                reports.push(r);
            }
            if reports.len() == 1 {
                return Ok(Artifact::Report(reports.pop().expect("one report")));
            }
            let mut csv = String::from("prior_a,prior_b,name,value,mc_se,ess,reference\n");
            let mut warnings = Vec::new();
            for r in &reports {
                let (a, b) = (r.metadata["a"].as_f64().unwrap_or(f64::NAN), r.metadata["b"].as_f64().unwrap_or(f64::NAN));
                for v in &r.values {
                    let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
                    let reference = r.metadata["reference"].get(&v.name).and_then(Value::as_f64);
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        fmt_num(a),
                        fmt_num(b),
                        v.name,
                        opt(v.value),
                        opt(v.mc_se),
                        opt(v.ess),
                        opt(reference)
                    ));
                }
                warnings.extend(r.warnings.iter().map(|w| format!("({a}, {b}): {w}")));
            }
            let json = serde_json::to_value(&reports).expect("reports serialize");
            Ok(Artifact::Table { csv, json, warnings })
        }
    }
}

// ---------------------------------------------------------------------------
// Regression
// ---------------------------------------------------------------------------

fn regression_data(c: &RegressionCmd) -> Result<RegressionData, CliError> {
    match &c.data {
        Some(path) => load_table(path, &c.response).map_err(validation),
        None => Ok(synthetic_fixture(c.fixture_seed)),
    }
}

fn lambda_grid(grid: &GridSpec) -> Vec<f64> {
    grid.axes[0].values()
}

pub fn regression(c: &RegressionCmd, grid: &GridSpec, mcmc: &McmcSettings) -> Result<Artifact, CliError> {
    let grid_vals = lambda_grid(grid);
    if let Some(bad) = grid_vals.iter().find(|v| !(**v > 0.0)) {
        return Err(validation(format!("lambda_sq = {bad} must be positive")));
    }
    let mut meta = serde_json::Map::new();
    meta.insert("theta".into(), json!("(beta_1, ..., beta_p, sigma) jointly"));
    meta.insert("sigma_prior".into(), json!("uniform on (0, 2)"));
    match c.analysis {
        RegressionAnalysis::KappaCurves => {
            let data = regression_data(c)?;
            let seed = mcmc.seed.ok_or_else(|| validation("regression needs a seed"))?;
            let mut rm = RegressionMcmc::new(mcmc.draws.unwrap_or(DEFAULT_CHAIN), seed);
            rm.burn_in = mcmc.burn_in;
            rm.thin = mcmc.thin.unwrap_or(1);
            rm.prior_draws = mcmc.prior_draws;
            let table = kappa_curves(&data, &grid_vals, &c.prior_kinds, &rm).map_err(validation)?;
            meta.insert("n".into(), json!(data.n()));
            meta.insert("p".into(), json!(data.p()));
            meta.insert("covariates".into(), json!(data.names));
            meta.insert("seed".into(), json!(seed));
            meta.insert(
                "likelihood_terms".into(),
                json!("local: likelihood norms are taken over the prior support"),
            );
            let json = json!({ "metadata": meta, "rows": table.rows, "warnings": table.warnings });
            Ok(Artifact::Table { csv: table.to_csv(), json, warnings: table.warnings })
        }
        RegressionAnalysis::PriorPrior => {
            let seed = mcmc.seed.ok_or_else(|| validation("regression needs a seed"))?;
            let p = match (c.p, &c.data) {
                (Some(p), _) => p,
                (None, Some(_)) => regression_data(c)?.p(),
                (None, None) => 8,
            };
            let draws = mcmc.draws.unwrap_or(100_000);
            let rows = prior_prior_curve(&grid_vals, &c.centers, p, draws, seed).map_err(|e| CliError::Numerical {
                term: "kappa_pi1_pi2".into(),
                detail: e.to_string(),
            })?;
            meta.insert("p".into(), json!(p));
            meta.insert("seed".into(), json!(seed));
            meta.insert(
                "note".into(),
                json!("beta block only; the common sigma prior contributes a factor 1 to every prior-prior compatibility"),
            );
            let json = json!({ "metadata": meta, "rows": rows, "warnings": [] });
            Ok(Artifact::Table { csv: prior_prior_csv(&rows), json, warnings: Vec::new() })
        }
        RegressionAnalysis::PriorNorms => {
            let p = match (c.p, &c.data) {
                (Some(p), _) => p,
                (None, Some(_)) => regression_data(c)?.p(),
                (None, None) => 8,
            };
            let mut csv = String::from("lambda_sq,prior_kind,norm\n");
            let mut rows = Vec::new();
            for &l in &grid_vals {
                for &k in &c.prior_kinds {
                    let v = prior_norm_shrinkage(k, l, p).map_err(validation)?;
                    csv.push_str(&format!("{},{},{}\n", fmt_num(l), k.as_str(), fmt_num(v)));
                    rows.push(json!({ "lambda_sq": l, "prior_kind": k.as_str(), "norm": v }));
                }
            }
            meta.insert("p".into(), json!(p));
            meta.insert(
                "note".into(),
                json!("beta block only; the sigma prior multiplies every norm by 2^(-1/2)"),
            );
            let json = json!({ "metadata": meta, "rows": rows, "warnings": [] });
            Ok(Artifact::Table { csv, json, warnings: Vec::new() })
        }
    }
}
