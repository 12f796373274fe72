//! Quantities derived from EOT: the Dudley metric and Hölder IPMs, the harmonic
//! upper bound, the closed-form maximiser of `min_i lambda_i x_i` and relative errors.

use ndarray::Array2;

use crate::error::{EotError, Result};
use crate::lp::{eot_exact, holder_family, ot_exact, validate_metric};
use crate::measures::CostFamily;

/// Dudley metric between two weightings of one support with distance matrix `d`,
/// computed as EOT with costs `(2 * 1[x != y], d)`.
pub fn dudley(a: &[f64], b: &[f64], d: &Array2<f64>) -> Result<f64> {
    holder_ipm(a, b, d, 1.0)
}

/// IPM over `{phi : |phi|_inf + Hölder_alpha(phi) <= 1}`, computed as EOT with costs
/// `(2 * 1[x != y], d^alpha)`.
pub fn holder_ipm(a: &[f64], b: &[f64], d: &Array2<f64>, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(EotError::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    validate_metric(d)?;
    let family = holder_family(d, alpha)?;
    Ok(eot_exact(a, b, &family)?.value)
}

/// EOT value next to the per-cost OT values and the harmonic bound built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub eot_value: f64,
    pub per_cost_ot: Vec<f64>,
    /// `(sum_i 1 / W_i)^-1`, or 0 when some `W_i` vanishes.
    pub harmonic_bound: f64,
    pub min_ot: f64,
}

pub fn harmonic_upper_bound(a: &[f64], b: &[f64], family: &CostFamily) -> Result<BoundReport> {
    if family.matrices().iter().any(|c| c.iter().any(|&v| v < 0.0)) {
        return Err(EotError::InvalidCost("the harmonic bound needs nonnegative costs".into()));
    }
    let eot_value = eot_exact(a, b, family)?.value;
    let per_cost_ot = family
        .matrices()
        .iter()
        .map(|c| ot_exact(a, b, c).map(|s| s.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport {
        eot_value,
        harmonic_bound: harmonic_mean_bound(&per_cost_ot),
        min_ot: per_cost_ot.iter().copied().fold(f64::INFINITY, f64::min),
        per_cost_ot,
    })
}

fn harmonic_mean_bound(w: &[f64]) -> f64 {
    if w.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    1.0 / w.iter().map(|v| 1.0 / v).sum::<f64>()
}

/// `lambda*_i = (1 / x_i) / sum_j (1 / x_j)`, the maximiser of `min_i lambda_i x_i` over the
/// simplex. Every product `lambda*_i x_i` equals `(sum_j 1 / x_j)^-1`.
pub fn lambda_star_closed_form(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(EotError::InvalidParameter("empty input".into()));
    }
    if let Some(v) = x.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(EotError::InvalidParameter(format!("entries must be positive, got {v}")));
    }
    let total: f64 = x.iter().map(|v| 1.0 / v).sum();
    Ok(x.iter().map(|v| (1.0 / v) / total).collect())
}

/// `(approx - truth) / truth`
pub fn relative_error(approx: f64, truth: f64) -> Result<f64> {
    if !(truth > 0.0) {
        return Err(EotError::InvalidParameter(format!("reference value must be positive, got {truth}")));
    }
    Ok((approx - truth) / truth)
}
