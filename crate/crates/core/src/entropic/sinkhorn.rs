use ndarray::Array2;

use super::objective::{dot, l1_residual};
use super::{SolveOptions, VALUE_WINDOW};
use crate::error::{EotError, Result};
use crate::lp::checked_weights;

/// Result of the single-cost reference solver.
#[derive(Debug, Clone)]
pub struct SinkhornResult {
    /// `<f, a> + <g, b> - eps * sum exp((f ⊕ g - C) / eps)`
    pub value: f64,
    /// `<P, C>` of the final plan.
    pub transport_cost: f64,
    pub plan: Array2<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Log-domain Sinkhorn iterations for entropic OT with a single cost.
///
/// Same stopping rule as the EOT solvers.
pub fn sinkhorn_baseline(a: &[f64], b: &[f64], cost: &Array2<f64>, epsilon: f64, opts: &SolveOptions) -> Result<SinkhornResult> {
    opts.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(EotError::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    let (n, m) = cost.dim();
    if a.len() != n || b.len() != m {
        return Err(EotError::DimensionError(format!(
            "marginals of length ({}, {}) for a {n}x{m} cost",
            a.len(),
            b.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(EotError::InvalidCost("cost entries must be finite".into()));
    }
    let a = checked_weights(a, "a")?;
    let b = checked_weights(b, "b")?;
    if let Some(k) = a.iter().chain(&b).position(|&w| w <= 0.0) {
        return Err(EotError::NotStrictlyPositive { index: k });
    }
    let cost = cost.as_standard_layout().into_owned();
    let c = cost.as_slice().expect("standard layout");
    let log_a: Vec<f64> = a.iter().map(|v| v.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|v| v.ln()).collect();

    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut history: Vec<f64> = Vec::new();
    let mut buf = vec![0.0; m.max(n)];
    let mut iterations = 0;
    let mut converged = false;
    let mut value = f64::NAN;
    while iterations < opts.max_iter {
        iterations += 1;
        for k in 0..n {
            let row = &c[k * m..(k + 1) * m];
            let s = &mut buf[..m];
            for l in 0..m {
                s[l] = (g[l] - row[l]) / epsilon;
            }
            f[k] = epsilon * (log_a[k] - lse(s));
        }
        for l in 0..m {
            let s = &mut buf[..n];
            for k in 0..n {
                s[k] = (f[k] - c[k * m + l]) / epsilon;
            }
            g[l] = epsilon * (log_b[l] - lse(s));
        }
        let (mass, rows) = kernel_rows(&f, &g, c, epsilon, n, m);
        // columns match b exactly after the g-update
        value = dot(&f, &a) + dot(&g, &b) - epsilon * mass;
        if !value.is_finite() {
            return Err(EotError::numerical(iterations, "non-finite Sinkhorn value"));
        }
        history.push(value);
        let residual = l1_residual(&rows, &b, &a, &b);
        if residual <= opts.tol && history.len() > VALUE_WINDOW {
            let old = history[history.len() - 1 - VALUE_WINDOW];
            if (value - old).abs() <= opts.value_tol * value.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }
    let plan = Array2::from_shape_fn((n, m), |(k, l)| ((f[k] + g[l] - c[k * m + l]) / epsilon).exp());
    let transport_cost = (&plan * &cost).sum();
    Ok(SinkhornResult {
        value,
        transport_cost,
        plan,
        f,
        g,
        iterations,
        converged,
    })
}

/// Total mass and row sums of `exp((f ⊕ g - C) / eps)`.
fn kernel_rows(f: &[f64], g: &[f64], c: &[f64], eps: f64, n: usize, m: usize) -> (f64, Vec<f64>) {
    let mut rows = vec![0.0; n];
    for k in 0..n {
        rows[k] = (0..m).map(|l| ((f[k] + g[l] - c[k * m + l]) / eps).exp()).sum();
    }
    (rows.iter().sum(), rows)
}

fn lse(s: &[f64]) -> f64 {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
