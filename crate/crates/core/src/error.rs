use thiserror::Error;

/// Errors raised by samplers, solvers and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty set")]
    EmptySet,
    #[error("start point {0:?} lies outside the domain")]
    StartOutsideDomain([i64; 3]),
    #[error("target point {0:?} lies outside the domain")]
    TargetOutsideDomain([i64; 3]),
    #[error("unreachable conditioning: hitting field vanishes at {0:?}")]
    UnreachableConditioning([i64; 3]),
    #[error("solver did not converge after {iterations} iterations (max residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid scale: {0}")]
    InvalidScale(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("path format: {0}")]
    PathFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
