use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {path}: {message}")]
    Validation { path: String, message: String },

    #[error("observation {observation} has zero probability under predictor {predictor:?}")]
    DegenerateEvidence {
        predictor: Vec<f64>,
        observation: usize,
    },

    #[error("gram matrix is singular: minimum eigenvalue {sigma_min:e} <= {tolerance:e}")]
    RankDeficient { sigma_min: f64, tolerance: f64 },

    #[error("projected fixed-point system is singular (min |eigenvalue| of symmetric part {sigma_min:e})")]
    SingularSystem { sigma_min: f64 },

    #[error("chain is reducible: {closed_classes} closed communicating classes")]
    Reducible { closed_classes: usize },

    #[error("chain is periodic with period {period}")]
    Periodic { period: usize },

    #[error("iteration did not converge after {iterations} iterations (last change {change:e})")]
    NotConverged { iterations: usize, change: f64 },

    #[error("state-action pairs with zero stationary mass: {pairs:?}")]
    Coverage { pairs: Vec<(usize, usize)> },

    #[error("iterate diverged at step {step}: |theta| = {norm:e}")]
    Divergence { step: u64, norm: f64 },

    #[error("enumeration budget exceeded: {what} needs {required} items, budget is {budget}")]
    Budget {
        what: &'static str,
        required: f64,
        budget: usize,
    },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
