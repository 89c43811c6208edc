use thiserror::Error;

use crate::sdp::SdpStatus;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (smallest eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("state trace is {0}, expected 1")]
    NotNormalized(f64),

    #[error("Kraus operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("operator is outside the Rains set (trace norm of partial transpose {0})")]
    NotRainsFeasible(f64),

    #[error(
        "solver did not reach optimality: {status:?} after {iterations} iterations (gap {gap:.3e})"
    )]
    Solver {
        status: SdpStatus,
        iterations: usize,
        gap: f64,
    },

    #[error("divergence is infinite: weight {0:.3e} of the first argument lies outside the support of the second")]
    InfiniteDivergence(f64),

    #[error("optimizer did not converge: {0}")]
    NotConverged(String),

    #[error("requested error {requested} is below the smallest attainable error {minimum}")]
    Unattainable { requested: f64, minimum: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval_open(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie in (0, 1), got {x}"
        )))
    }
}

pub(crate) fn check_probability(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie in [0, 1], got {x}"
        )))
    }
}
