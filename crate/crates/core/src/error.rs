use thiserror::Error;

use crate::prox_descent::InnerRecord;
use crate::solvers::RunRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be positive")]
    EmptyDimension,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("optimum unavailable: linear solve did not converge in {iterations} iterations")]
    OptimumUnavailable { iterations: usize },

    /// The descent test never passed within the inner budget. Carries the
    /// partial inner trace so callers can inspect what happened.
    #[error("inner budget exhausted after {budget} prox solves")]
    InnerBudgetExhausted {
        budget: usize,
        trace: Vec<InnerRecord>,
    },

    /// A solver run stopped early; `partial` holds every iteration completed
    /// before `cause` occurred.
    #[error("run aborted at iteration {}: {cause}", partial.iterations.len().saturating_sub(1))]
    RunAborted {
        partial: Box<RunRecord>,
        cause: Box<Error>,
    },

    #[error("check not applicable: {0}")]
    NotApplicable(String),

    #[error("log-log window unusable: {0}")]
    WindowUnusable(String),

    #[error("unknown objective {0:?} (expected worst-case:<n> or psd-quad:<n>:<seed>)")]
    UnknownObjective(String),

    #[error("unknown solver {0:?} (expected gd, agd, pbm, pbm-single or apbm)")]
    UnknownSolver(String),
}

impl Error {
    /// True when the error is, or wraps, an exhausted inner budget.
    pub fn is_budget_exhausted(&self) -> bool {
        match self {
            Error::InnerBudgetExhausted { .. } => true,
            Error::RunAborted { cause, .. } => cause.is_budget_exhausted(),
            _ => false,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
