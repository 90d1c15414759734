use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A data callable produced a non-finite value.
    #[error("non-finite value {value} when evaluating {what} at ({x}, {y})")]
    Evaluation {
        what: &'static str,
        x: f64,
        y: f64,
        value: f64,
    },

    #[error("linear solve failed: relative residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    #[error("linearisation diverged at iteration {iteration}: {reason} (try a smaller tau)")]
    Divergence { iteration: usize, reason: String },

    #[error("fixed-point iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("adaptive cycle {cycle}: {source}")]
    AtCycle {
        cycle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_cycle(self, cycle: usize) -> Self {
        Error::AtCycle {
            cycle,
            source: Box::new(self),
        }
    }

    /// True when the root cause is a numerical failure (linear solve or
    /// divergence) rather than bad input or I/O.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::SolverFailure { .. } | Error::Divergence { .. } => true,
            Error::AtIteration { source, .. } | Error::AtCycle { source, .. } => {
                source.is_solver_failure()
            }
            _ => false,
        }
    }
}
