//! The JSON run configuration: one command per document.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub mcmc: Option<McmcSettings>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    BetaBinomial(BetaBinomialCmd),
    Nig(NigCmd),
    Expfam(ExpfamCmd),
    Estimate(EstimateCmd),
    Sweep(SweepCmd),
    Regression(RegressionCmd),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BetaBinomial(_) => "beta-binomial",
            Command::Nig(_) => "nig",
            Command::Expfam(_) => "expfam",
            Command::Estimate(_) => "estimate",
            Command::Sweep(_) => "sweep",
            Command::Regression(_) => "regression",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaBinomialCmd {
    pub a: f64,
    pub b: f64,
    pub n: u64,
    pub n1: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NigCmd {
    pub mu0: f64,
    pub eta0: f64,
    pub nu0: f64,
    pub sigma0sq: f64,
    pub n: u64,
    pub ybar: f64,
    /// Centred sum of squares of the sample.
    pub ss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpfamCmd {
    pub family: String,
    /// Known variance for `normal-known-variance`.
    #[serde(default)]
    pub sigmasq: Option<f64>,
    pub tau: Vec<f64>,
    pub n0: f64,
    #[serde(default)]
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    /// Running estimates of the prior–posterior compatibility.
    Trace,
    /// Posterior- and prior-mean estimates of every norm and compatibility.
    Suite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceEstimator {
    Harmonic,
    Stable,
}

impl TraceEstimator {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEstimator::Harmonic => "harmonic",
            TraceEstimator::Stable => "stable",
        }
    }
}

/// Monte Carlo estimation for the Beta–Bernoulli model, one run per prior
/// setting `(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCmd {
    #[serde(default = "default_mode")]
    pub mode: EstimateMode,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<TraceEstimator>,
    /// Prior settings `[a, b]`.
    pub priors: Vec<[f64; 2]>,
    pub n: u64,
    pub n1: u64,
    /// Targets for `suite` mode; all when empty.
    #[serde(default)]
    pub targets: Vec<String>,
    /// Second Beta prior `[a, b]` for the prior–prior target.
    #[serde(default)]
    pub second_prior: Option<[f64; 2]>,
    /// Posterior draws to use instead of sampling (CSV, one column).
    #[serde(default)]
    pub posterior_samples: Option<PathBuf>,
    #[serde(default)]
    pub prior_samples: Option<PathBuf>,
    /// Where to write the posterior and prior draws of the first setting.
    #[serde(default)]
    pub export_posterior: Option<PathBuf>,
    #[serde(default)]
    pub export_prior: Option<PathBuf>,
}

fn default_mode() -> EstimateMode {
    EstimateMode::Trace
}

fn default_estimators() -> Vec<TraceEstimator> {
    vec![TraceEstimator::Harmonic, TraceEstimator::Stable]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepModel {
    BetaBinomial,
    Nig,
}

impl SweepModel {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepModel::BetaBinomial => "beta-binomial",
            SweepModel::Nig => "nig",
        }
    }

    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            SweepModel::BetaBinomial => &["a", "b", "n", "n1"],
            SweepModel::Nig => &["mu0", "eta0", "nu0", "sigma0sq", "n", "ybar", "ss"],
        }
    }
}

/// Closed-form quantities over a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCmd {
    pub model: SweepModel,
    /// Values of the parameters that are not swept.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Output columns; every metric of the model when empty.
    #[serde(default)]
    pub metrics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionAnalysis {
    /// Prior–likelihood, prior–posterior and likelihood–posterior curves.
    KappaCurves,
    /// Gaussian–Laplace prior compatibility for several Gaussian centers.
    PriorPrior,
    /// Closed-form prior norms.
    PriorNorms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionCmd {
    #[serde(default = "default_analysis")]
    pub analysis: RegressionAnalysis,
    /// Data table; the seeded synthetic fixture is used when absent.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default = "default_response")]
    pub response: String,
    #[serde(default)]
    pub fixture_seed: u64,
    #[serde(default = "default_kinds")]
    pub prior_kinds: Vec<crate::regression::PriorKind>,
    #[serde(default = "default_centers")]
    pub centers: Vec<f64>,
    /// Number of coefficients for analyses that need no data.
    #[serde(default)]
    pub p: Option<usize>,
}

fn default_analysis() -> RegressionAnalysis {
    RegressionAnalysis::KappaCurves
}

fn default_response() -> String {
    "lpsa".into()
}

fn default_kinds() -> Vec<crate::regression::PriorKind> {
    vec![crate::regression::PriorKind::Gaussian, crate::regression::PriorKind::Laplace]
}

fn default_centers() -> Vec<f64> {
    vec![0.0, 0.5, 2.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub parameter: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "default_scale")]
    pub scale: AxisScale,
}

fn default_scale() -> AxisScale {
    AxisScale::Linear
}

impl Axis {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(format!("grid axis '{}': {msg}", self.parameter)));
        if self.points == 0 {
            return bad("needs at least one point".into());
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return bad(format!("need finite min <= max, got [{}, {}]", self.min, self.max));
        }
        if self.points == 1 && self.min != self.max {
            return bad("a single point needs min == max".into());
        }
        if self.scale == AxisScale::Log && !(self.min > 0.0) {
            return bad(format!("log scale needs min > 0, got {}", self.min));
        }
        Ok(())
    }

    /// Grid values from `min` to `max` inclusive. Linear points are formed
    /// as weighted averages of the end points so that values on a decimal
    /// lattice come out exact where possible; log points likewise work
    /// with base-10 exponents so that powers of ten are exact.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let i = i as f64;
                match self.scale {
                    AxisScale::Linear => (self.min * (last - i) + self.max * i) / last,
                    AxisScale::Log => 10f64.powf((self.min.log10() * (last - i) + self.max.log10() * i) / last),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct McmcSettings {
    /// Posterior draws (direct sampling) or chain length (Metropolis).
    #[serde(default)]
    pub draws: Option<usize>,
    #[serde(default)]
    pub prior_draws: Option<usize>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub thin: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Record a running estimate every this many draws.
    #[serde(default)]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("invalid config: {e}")))
    }

    /// Whether the command runs a Monte Carlo estimator.
    pub fn uses_monte_carlo(&self) -> bool {
        match &self.command {
            Command::Estimate(_) => true,
            Command::Regression(r) => r.analysis != RegressionAnalysis::PriorNorms,
            _ => false,
        }
    }

    /// Parameters a grid axis may refer to.
    pub fn grid_parameters(&self) -> &'static [&'static str] {
        match &self.command {
            Command::BetaBinomial(_) => SweepModel::BetaBinomial.parameters(),
            Command::Nig(_) => SweepModel::Nig.parameters(),
            Command::Sweep(s) => s.model.parameters(),
            Command::Regression(_) => &["lambda_sq"],
            Command::Expfam(_) | Command::Estimate(_) => &[],
        }
    }

    /// Structural checks that do not need any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(grid) = &self.grid {
            let allowed = self.grid_parameters();
            if allowed.is_empty() {
                return Err(CliError::Validation(format!("command '{}' does not take a grid", self.command.name())));
            }
            if grid.axes.is_empty() {
                return Err(CliError::Validation("grid has no axes".into()));
            }
            for (i, axis) in grid.axes.iter().enumerate() {
                if !allowed.contains(&axis.parameter.as_str()) {
                    return Err(CliError::Validation(format!(
                        "grid axis '{}' is not a parameter of '{}' (expected one of {})",
                        axis.parameter,
                        self.command.name(),
                        allowed.join(", ")
                    )));
                }
                if grid.axes[..i].iter().any(|a| a.parameter == axis.parameter) {
                    return Err(CliError::Validation(format!("grid axis '{}' appears twice", axis.parameter)));
                }
                axis.validate()?;
            }
        }
        match &self.command {
            Command::Sweep(s) => {
                if self.grid.is_none() {
                    return Err(CliError::Validation("sweep needs a grid".into()));
                }
                for k in s.params.keys() {
                    if !s.model.parameters().contains(&k.as_str()) {
                        return Err(CliError::Validation(format!(
                            "'{k}' is not a parameter of {} (expected one of {})",
                            s.model.as_str(),
                            s.model.parameters().join(", ")
                        )));
                    }
                }
            }
            Command::Regression(r) => {
                if self.grid.is_none() {
                    return Err(CliError::Validation("regression needs a lambda_sq grid".into()));
                }
                if r.prior_kinds.is_empty() {
                    return Err(CliError::Validation("prior_kinds is empty".into()));
                }
            }
            Command::Estimate(e) => {
                if e.priors.is_empty() {
                    return Err(CliError::Validation("estimate needs at least one prior setting".into()));
                }
                if e.mode == EstimateMode::Trace && e.estimators.is_empty() {
                    return Err(CliError::Validation("no trace estimators selected".into()));
                }
            }
            _ => {}
        }
        if self.uses_monte_carlo() && self.mcmc.as_ref().and_then(|m| m.seed).is_none() {
            return Err(CliError::Validation(format!(
                "command '{}' runs a Monte Carlo estimator and needs a seed (mcmc.seed or --seed)",
                self.command.name()
            )));
        }
        Ok(())
    }
}
