//! Special functions and the quadrature engine used as ground truth for
//! every closed form in the crate.

mod quad;
mod special;

pub use quad::{
    integrate, integrate_log, LogQuadResult, QuadResult, QuadSpec, SupportRegion,
    UnboundedTransform, MAX_QUAD_DIM,
};
pub use special::{
    ln_sqrt_pi, log_add_exp, log_beta, log_binomial, log_gamma, log_sum_exp, log_upper_gamma, softplus,
};

#[allow(unused_imports)]
pub(crate) use special::{ln_beta, ln_gamma};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    #[error("{function}: argument outside domain ({detail})")]
    Domain { function: &'static str, detail: String },
    #[error("invalid support region: {0}")]
    InvalidRegion(String),
    #[error("invalid quadrature settings: {0}")]
    InvalidSpec(String),
    #[error("tensor quadrature supports at most {max} dimensions, got {dim}")]
    DimensionTooHigh { dim: usize, max: usize },
    #[error("integrand returned NaN at {at:?}")]
    NanIntegrand { at: Vec<f64> },
    #[error("integrand is not finite at {at:?}")]
    NonFiniteIntegrand { at: Vec<f64> },
}
