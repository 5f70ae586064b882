//! Crate-wide error type.

use thiserror::Error;

use crate::report::VerificationReport;

/// Errors raised by the numerical and symbolic layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("matrix exponential did not converge within {terms} terms (scaled one-norm {norm:.3e})")]
    ExpNonConvergence { terms: usize, norm: f64 },

    #[error("basis normalization failed (residual {:.3e})", .0.max_abs_err)]
    Normalization(Box<VerificationReport>),

    #[error("invalid observable spec: {}", .0.join("; "))]
    Spec(Vec<String>),

    #[error("{free} free indices exceed the brute-force budget of {budget} (about {cost:.3e} index tuples); use factorized evaluation")]
    Budget { free: usize, budget: usize, cost: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        message: String,
        offset: usize,
        line: usize,
        column: usize,
    },

    #[error("no bracket rule for {lhs} with {rhs}: {reason}")]
    RuleGap { lhs: String, rhs: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
