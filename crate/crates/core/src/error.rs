use thiserror::Error;

pub type Result<T, E = EotError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EotError {
    #[error("measure has no mass")]
    DegenerateMeasure,
    #[error("weight {index} is negative or not finite ({value})")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weight {index} is zero; weights must be strictly positive")]
    NotStrictlyPositive { index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionError(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid metric matrix: {0}")]
    InvalidMetric(String),
    #[error("invalid cost family: {0}")]
    InvalidCost(String),
    #[error("numerical failure at iteration {iteration}: {reason}")]
    NumericalFailure { iteration: usize, reason: String },
    #[error("coupling has an empty {axis} {index}")]
    DegeneratePlan { axis: &'static str, index: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EotError {
    pub(crate) fn numerical(iteration: usize, reason: impl Into<String>) -> Self {
        EotError::NumericalFailure {
            iteration,
            reason: reason.into(),
        }
    }
}
