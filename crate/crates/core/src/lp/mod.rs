//! Exact ground truth: a dense LP solver and the transport programs built on it.

pub mod simplex;
mod transport;

pub use simplex::{lp_solve, Constraint, ExactSolution, KktResiduals, LinearProgram, LpStatus, Relation, Sense};
pub use transport::{
    dudley_ipm_exact, eot_exact, ot_exact, utilitarian_exact, CertificateResiduals, EotExactResult, OtSolution,
};

pub(crate) use transport::{holder_family, validate_metric};

use crate::error::{EotError, Result};

/// Checks a weight vector (nonnegative, finite, positive total) and rescales it to sum to one.
pub(crate) fn checked_weights(w: &[f64], name: &str) -> Result<Vec<f64>> {
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(EotError::InvalidWeight { index, value });
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(EotError::DegenerateMeasure);
    }
    if (total - 1.0).abs() > 1e-6 {
        return Err(EotError::InvalidParameter(format!(
            "{name} sums to {total}, expected a probability vector"
        )));
    }
    Ok(w.iter().map(|v| v / total).collect())
}
