use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariance matrix of the constraint functions is singular or ill-conditioned (condition number {condition:.3e}); drop linearly dependent constraints or increase n")]
    SingularCovariance { condition: f64 },

    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),

    #[error("rate-condition check needs a lower bound for the smallest covariance eigenvalue")]
    MissingBound,

    #[error("invalid marginal specification: {0}")]
    InvalidSpec(String),

    #[error("cell ({row}, {col}) has zero count")]
    ZeroCell { row: usize, col: usize },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last change {change:.3e})")]
    NoConvergence { iterations: usize, change: f64 },

    #[error("mixture density is not positive at x = {x}")]
    NonPositiveDensity { x: f64 },

    #[error("quadrature error estimate {estimate:.3e} exceeds target {target:.3e}")]
    QuadratureFailure { estimate: f64, target: f64 },

    #[error("optimization failed: {0}")]
    OptimizationFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("calibration plan failed: {failed} of {replicates} replicates errored (first error: {first})")]
    PlanFailure {
        failed: usize,
        replicates: usize,
        first: String,
    },

    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
