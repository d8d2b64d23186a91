//! Error type shared by every solver stage.

use thiserror::Error;

use crate::fixed_point::SolveReport;
use crate::frozen::MinimizeOutcome;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure in {what}: achieved {achieved:e}")]
    NumericFailure { what: String, achieved: f64 },

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("minimization did not converge within {} iterations (residual {:e})", .0.iterations, .0.residual_sup)]
    InnerNonConvergence(Box<MinimizeOutcome>),

    #[error("line search stagnated after {failures} consecutive failures (residual {residual:e})")]
    Stagnation { failures: usize, residual: f64 },

    #[error("subsolution construction failed: {0}")]
    ConstructionFailure(String),

    #[error("degenerate subsolution: minimum {min:e} below margin {margin:e}")]
    DegenerateSubsolution { min: f64, margin: f64 },

    #[error("truncation consistency violated: solution dips {depth:e} below the subsolution")]
    TruncationConsistency { depth: f64 },

    #[error("fixed-point iteration did not converge within {} outer iterations", .0.outer_iterations)]
    OuterNonConvergence(Box<SolveReport>),

    #[error("instance refused: {0}")]
    RefusedInstance(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
