//! Command-line front end: reads one JSON run configuration, runs the
//! command it names and writes a JSON report or a CSV table.
//!
//! Exit codes: 0 on success, 2 when the configuration, the inputs or the
//! output path are invalid, 3 when a computation fails numerically.

mod commands;
mod config;

use std::path::{Path, PathBuf};

use clap::Parser;
use thiserror::Error;

pub use commands::{Artifact, TRACE_HEADER};
pub use config::*;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure in {term}: {detail}")]
    Numerical { term: String, detail: String },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "bayes-geom", version, about = "Norms, angles and compatibility of priors, likelihoods and posteriors")]
pub struct Args {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; overrides the configuration. Standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Random seed; overrides the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for grid computations.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Command-line overrides applied on top of a configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Where and how the result of a run was written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub artifact: Artifact,
    pub format: Format,
    pub text: String,
    pub path: Option<PathBuf>,
}

fn default_format(cfg: &RunConfig) -> Format {
    match &cfg.command {
        Command::Sweep(_) | Command::Regression(_) => Format::Csv,
        Command::Estimate(e) if e.mode == EstimateMode::Trace => Format::Csv,
        Command::BetaBinomial(_) | Command::Nig(_) if cfg.grid.is_some() => Format::Csv,
        _ => Format::Json,
    }
}

fn resolve_format(cfg: &RunConfig, path: Option<&Path>) -> Format {
    if let Some(f) = cfg.output.as_ref().and_then(|o| o.format) {
        return f;
    }
    match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
        Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
        _ => default_format(cfg),
    }
}

fn check_output_path(path: &Path) -> Result<(), CliError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(CliError::Io(format!("output directory {} does not exist", parent.display())));
    }
    if path.is_dir() {
        return Err(CliError::Io(format!("output path {} is a directory", path.display())));
    }
    Ok(())
}

fn execute(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let mcmc = cfg.mcmc.clone().unwrap_or_default();
    match &cfg.command {
        Command::BetaBinomial(c) => match &cfg.grid {
            Some(grid) => {
                let base = [("a", c.a), ("b", c.b), ("n", c.n as f64), ("n1", c.n1 as f64)]
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect();
                commands::sweep(SweepModel::BetaBinomial, &base, grid, &[])
            }
            None => commands::beta_binomial(c),
        },
        Command::Nig(c) => match &cfg.grid {
            Some(grid) => {
                let base = [
                    ("mu0", c.mu0),
                    ("eta0", c.eta0),
                    ("nu0", c.nu0),
                    ("sigma0sq", c.sigma0sq),
                    ("n", c.n as f64),
                    ("ybar", c.ybar),
                    ("ss", c.ss),
                ]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
                commands::sweep(SweepModel::Nig, &base, grid, &[])
            }
            None => commands::nig(c),
        },
        Command::Expfam(c) => commands::expfam(c),
        Command::Estimate(c) => commands::estimate(c, &mcmc),
        Command::Sweep(c) => commands::sweep(c.model, &c.params, cfg.grid.as_ref().expect("validated"), &c.metrics),
        Command::Regression(c) => commands::regression(c, cfg.grid.as_ref().expect("validated"), &mcmc),
    }
}

fn render(artifact: &Artifact, format: Format) -> String {
    match (artifact, format) {
        (Artifact::Report(r), Format::Json) => {
            let mut s = r.to_json();
            s.push('\n');
            s
        }
        (Artifact::Report(r), Format::Csv) => r.to_csv(),
        (Artifact::Table { csv, .. }, Format::Csv) => csv.clone(),
        (Artifact::Table { json, .. }, Format::Json) => {
            let mut s = serde_json::to_string_pretty(json).expect("tables serialize");
            s.push('\n');
            s
        }
    }
}

/// Validates and runs a configuration, then writes the result to the
/// output path (or returns it for standard output when there is none).
///
/// A report in which some quantity failed is still written; the error
/// returned afterwards names the first failing quantity.
pub fn run(mut cfg: RunConfig, ov: &Overrides) -> Result<RunOutcome, CliError> {
    if let Some(seed) = ov.seed {
        cfg.mcmc.get_or_insert_with(McmcSettings::default).seed = Some(seed);
    }
    cfg.validate()?;
    let path = ov.output.clone().or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()));
    if let Some(p) = &path {
        check_output_path(p)?;
    }
    let format = resolve_format(&cfg, path.as_deref());
    let artifact = match ov.threads {
        Some(t) => {
            if t == 0 {
                return Err(CliError::Validation("--threads must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
            pool.install(|| execute(&cfg))?
        }
        None => execute(&cfg)?,
    };
    for w in artifact.warnings() {
        log::warn!("{w}");
    }
    let text = render(&artifact, format);
    if let Some(p) = &path {
        std::fs::write(p, &text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
        log::info!("wrote {}", p.display());
    }
    if let Artifact::Report(r) = &artifact {
        if let Some(bad) = r.values.iter().find(|v| v.error.is_some()) {
            return Err(CliError::Numerical {
                term: bad.name.clone(),
                detail: bad.error.clone().unwrap_or_default(),
            });
        }
    }
    Ok(RunOutcome { artifact, format, text, path })
}

/// Reads the configuration named by `args` and runs it. Returns the exit
/// code; results go to the output file or standard output, diagnostics to
/// standard error.
pub fn main_with_args(args: Args) -> i32 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return 2;
        }
    };
    let cfg = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let ov = Overrides { output: args.output, seed: args.seed, threads: args.threads };
    match run(cfg, &ov) {
        Ok(out) => {
            if out.path.is_none() {
                print!("{}", out.text);
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
