use thiserror::Error;

use crate::dtensor::IndexKind;
use crate::expr::{EvalError, SubstError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Subst(#[from] SubstError),
    #[error("chart `{chart}` is not regular at {point:?}: {what}")]
    Regularity {
        chart: String,
        point: Vec<f64>,
        what: String,
    },
    #[error("chart `{chart}`: {message}")]
    Chart { chart: String, message: String },
    #[error("metric: {0}")]
    Metric(String),
    #[error("dimension {n} exceeds the supported maximum of {max}")]
    Dimension { n: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("signature mismatch: {left:?} vs {right:?}")]
    SignatureMismatch {
        left: Vec<IndexKind>,
        right: Vec<IndexKind>,
    },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
