use ndarray::Array2;

use super::objective::plans_at;
use super::{DualState, RegularizedProblem};
use crate::error::{EotError, Result};
use crate::measures::{CostFamily, CouplingFamily};

/// Softmax plans `P_i ∝ exp((f ⊕ g - lambda_i C_i) / eps)`, normalised jointly over all
/// `(i, k, l)` so the whole family carries unit mass.
pub fn recover_primal(state: &DualState, prob: &RegularizedProblem) -> Result<CouplingFamily> {
    state.check(prob)?;
    let plans = plans_at(prob, &state.lambda, &state.f, &state.g, Vec::new());
    if !plans.log_z.is_finite() {
        return Err(EotError::numerical(0, "non-finite log-partition in primal recovery"));
    }
    Ok(unflatten(plans.weights, prob.family.len(), prob.a.len(), prob.b.len()))
}

pub(crate) fn unflatten(weights: Vec<f64>, num_costs: usize, n: usize, m: usize) -> CouplingFamily {
    let nm = n * m;
    let plans = (0..num_costs)
        .map(|i| Array2::from_shape_vec((n, m), weights[i * nm..(i + 1) * nm].to_vec()).expect("slab shape"))
        .collect();
    CouplingFamily::new(plans).expect("slabs share a shape")
}

/// Projects a nonnegative family onto the coupling set of `(a, b)`.
///
/// Rows of `sum_i P_i` are scaled down to at most `a`, then columns down to at most `b`,
/// with the same factor applied to every slab. The remaining deficit `(err_r, err_c)` is
/// added as `err_r err_c^T / |err_r|_1` to the slab with the smallest `<P_i, C_i>`.
pub fn round_to_feasible(couplings: &CouplingFamily, a: &[f64], b: &[f64], family: &CostFamily) -> Result<CouplingFamily> {
    round_impl(couplings, a, b, family, true)
}

/// With `strict = false`, empty rows or columns are left to the rank-one correction.
pub(crate) fn round_impl(
    couplings: &CouplingFamily,
    a: &[f64],
    b: &[f64],
    family: &CostFamily,
    strict: bool,
) -> Result<CouplingFamily> {
    let first = &couplings.plans()[0];
    let (n, m) = first.dim();
    if couplings.len() != family.len() || (family.rows(), family.cols()) != (n, m) {
        return Err(EotError::DimensionError(format!(
            "{} plans of shape {n}x{m} against {} costs of shape {}x{}",
            couplings.len(),
            family.len(),
            family.rows(),
            family.cols()
        )));
    }
    if a.len() != n || b.len() != m {
        return Err(EotError::DimensionError(format!(
            "marginals of length ({}, {}) for plans of shape {n}x{m}",
            a.len(),
            b.len()
        )));
    }
    if couplings.min_entry() < 0.0 || couplings.plans().iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(EotError::InvalidParameter("plans must be finite and nonnegative".into()));
    }

    let mut plans: Vec<Array2<f64>> = couplings.plans().to_vec();
    let rows = couplings.row_marginal();
    let row_scale: Vec<f64> = rows
        .iter()
        .zip(a)
        .enumerate()
        .map(|(k, (&r, &ak))| {
            if r > 0.0 {
                Ok((ak / r).min(1.0))
            } else if strict {
                Err(EotError::DegeneratePlan { axis: "row", index: k })
            } else {
                Ok(1.0)
            }
        })
        .collect::<Result<_>>()?;
    for p in &mut plans {
        for (mut row, &s) in p.rows_mut().into_iter().zip(&row_scale) {
            row *= s;
        }
    }

    let cols = sum_axis(&plans, 0);
    let col_scale: Vec<f64> = cols
        .iter()
        .zip(b)
        .enumerate()
        .map(|(l, (&c, &bl))| {
            if c > 0.0 {
                Ok((bl / c).min(1.0))
            } else if strict {
                Err(EotError::DegeneratePlan { axis: "column", index: l })
            } else {
                Ok(1.0)
            }
        })
        .collect::<Result<_>>()?;
    for p in &mut plans {
        for (mut col, &s) in p.columns_mut().into_iter().zip(&col_scale) {
            col *= s;
        }
    }

    let err_r: Vec<f64> = sum_axis(&plans, 1).iter().zip(a).map(|(r, x)| (x - r).max(0.0)).collect();
    let err_c: Vec<f64> = sum_axis(&plans, 0).iter().zip(b).map(|(c, x)| (x - c).max(0.0)).collect();
    let mass: f64 = err_r.iter().sum();
    if mass > 0.0 {
        let values: Vec<f64> = plans
            .iter()
            .zip(family.matrices())
            .map(|(p, c)| (p * c).sum())
            .collect();
        let target = values
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v < values[best] { i } else { best });
        let p = &mut plans[target];
        for (k, &er) in err_r.iter().enumerate() {
            if er == 0.0 {
                continue;
            }
            for (l, &ec) in err_c.iter().enumerate() {
                p[[k, l]] += er * ec / mass;
            }
        }
    }
    CouplingFamily::new(plans)
}

/// Sums of `sum_i P_i` over `axis` (0 gives column sums, 1 gives row sums).
fn sum_axis(plans: &[Array2<f64>], axis: usize) -> Vec<f64> {
    let mut out = plans[0].sum_axis(ndarray::Axis(axis));
    for p in &plans[1..] {
        out += &p.sum_axis(ndarray::Axis(axis));
    }
    out.to_vec()
}
