use thiserror::Error;

use crate::experiments::SaddleReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A point handed to an operation lies outside the feasible set.
    #[error("point lies outside the feasible set (violation {violation:.3e})")]
    Infeasible { violation: f64 },

    /// The map sent a feasible point outside the feasible set.
    #[error("map value leaves the feasible set (violation {violation:.3e})")]
    RangeViolation { violation: f64, image: Vec<f64> },

    #[error("projection did not converge after {iterations} cycles (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("empty search domain: {0}")]
    EmptyDomain(String),

    #[error("growth bound unmet: kappa {kappa:.6} is not below 1/2")]
    GrowthBoundUnmet { kappa: f64 },

    #[error("fixed point not located: residual {:.3e} after full budget", .0.residual)]
    FixedPointNotLocated(Box<SaddleReport>),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
