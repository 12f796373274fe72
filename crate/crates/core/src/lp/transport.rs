use ndarray::Array2;

use super::checked_weights;
use super::simplex::{lp_solve, LinearProgram, LpStatus, Relation};
use crate::error::{EotError, Result};
use crate::measures::{indicator_matrix, CostFamily, CouplingFamily};

/// Optimal EOT plans together with the dual certificate `(lambda, f, g)`.
#[derive(Debug, Clone)]
pub struct EotExactResult {
    /// Optimal value `t* = min_P max_i <P_i, C_i>`.
    pub value: f64,
    pub couplings: CouplingFamily,
    /// Multipliers of the epigraph rows `<P_i, C_i> <= t`, on the simplex.
    pub lambda: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub per_cost_values: Vec<f64>,
}

/// How far `(lambda, f, g)` is from certifying the returned plans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateResiduals {
    /// `max |f_k + g_l - lambda_i C_i[k,l]|` over cells with `P_i[k,l] > 1e-9`.
    pub on_support: f64,
    /// `max (f_k + g_l - lambda_i C_i[k,l])_+` over all cells.
    pub infeasibility: f64,
}

impl EotExactResult {
    pub fn marginal_residual(&self, a: &[f64], b: &[f64]) -> f64 {
        self.couplings.marginal_residual(a, b)
    }

    /// `|t* - <f, a> - <g, b>|`
    pub fn duality_gap(&self, a: &[f64], b: &[f64]) -> f64 {
        let dual = dot(&self.f, a) + dot(&self.g, b);
        (self.value - dual).abs()
    }

    /// `max_i |<P_i, C_i> - t*|`; zero at any optimum of a constant-sign family.
    pub fn equality_spread(&self) -> f64 {
        self.per_cost_values
            .iter()
            .fold(0.0_f64, |acc, v| acc.max((v - self.value).abs()))
    }

    pub fn certificate_residuals(&self, family: &CostFamily) -> CertificateResiduals {
        let mut on_support = 0.0_f64;
        let mut infeasibility = 0.0_f64;
        for ((plan, cost), &lam) in self.couplings.plans().iter().zip(family.matrices()).zip(&self.lambda) {
            for ((k, l), &p) in plan.indexed_iter() {
                let slack = self.f[k] + self.g[l] - lam * cost[[k, l]];
                infeasibility = infeasibility.max(slack);
                if p > 1e-9 {
                    on_support = on_support.max(slack.abs());
                }
            }
        }
        CertificateResiduals {
            on_support,
            infeasibility,
        }
    }
}

/// Solves `min_{P in Gamma(a, b)} max_i <P_i, C_i>` exactly.
///
/// The program has variables `(t, vec P_1, ..., vec P_N)`, equality rows for the
/// marginals of `sum_i P_i` and one epigraph row `<P_i, C_i> - t <= 0` per cost. The
/// marginal multipliers are the potentials `(f, g)`; the negated epigraph multipliers,
/// clamped and renormalised, are `lambda`.
pub fn eot_exact(a: &[f64], b: &[f64], family: &CostFamily) -> Result<EotExactResult> {
    family.check_marginals(a, b)?;
    let a = checked_weights(a, "a")?;
    let b = checked_weights(b, "b")?;
    let (n, m, big_n) = (family.rows(), family.cols(), family.len());
    let cell = |i: usize, k: usize, l: usize| 1 + i * n * m + k * m + l;

    let mut objective = vec![0.0; 1 + big_n * n * m];
    objective[0] = 1.0;
    let mut lp = LinearProgram::minimize(objective);
    lp.set_free(0);
    for (k, &ak) in a.iter().enumerate() {
        let coeffs = (0..big_n)
            .flat_map(|i| (0..m).map(move |l| (cell(i, k, l), 1.0)))
            .collect();
        lp.add_constraint(coeffs, Relation::Eq, ak);
    }
    for (l, &bl) in b.iter().enumerate() {
        let coeffs = (0..big_n)
            .flat_map(|i| (0..n).map(move |k| (cell(i, k, l), 1.0)))
            .collect();
        lp.add_constraint(coeffs, Relation::Eq, bl);
    }
    for (i, c) in family.matrices().iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = c
            .indexed_iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|((k, l), &v)| (cell(i, k, l), v))
            .collect();
        coeffs.push((0, -1.0));
        lp.add_constraint(coeffs, Relation::Le, 0.0);
    }

    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(EotError::numerical(sol.pivots, format!("EOT program reported {:?}", sol.status)));
    }
    let plans: Vec<Array2<f64>> = (0..big_n)
        .map(|i| Array2::from_shape_fn((n, m), |(k, l)| sol.primal[cell(i, k, l)].max(0.0)))
        .collect();
    let couplings = CouplingFamily::new(plans)?;
    let per_cost_values = couplings.per_cost_values(family);
    let f = sol.duals[..n].to_vec();
    let g = sol.duals[n..n + m].to_vec();
    let raw: Vec<f64> = sol.duals[n + m..].iter().map(|y| (-y).max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    let lambda = if total > 0.0 {
        raw.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / big_n as f64; big_n]
    };
    Ok(EotExactResult {
        value: sol.primal[0],
        couplings,
        lambda,
        f,
        g,
        per_cost_values,
    })
}

/// Exact Kantorovich problem for a single cost.
#[derive(Debug, Clone)]
pub struct OtSolution {
    pub value: f64,
    pub plan: Array2<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

pub fn ot_exact(a: &[f64], b: &[f64], cost: &Array2<f64>) -> Result<OtSolution> {
    let (n, m) = cost.dim();
    if a.len() != n || b.len() != m {
        return Err(EotError::DimensionError(format!(
            "marginals ({}, {}) do not match cost {n}x{m}",
            a.len(),
            b.len()
        )));
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(EotError::InvalidCost("cost has non-finite entries".into()));
    }
    let a = checked_weights(a, "a")?;
    let b = checked_weights(b, "b")?;
    let mut lp = LinearProgram::minimize(cost.iter().copied().collect());
    for (k, &ak) in a.iter().enumerate() {
        lp.add_constraint((0..m).map(|l| (k * m + l, 1.0)).collect(), Relation::Eq, ak);
    }
    for (l, &bl) in b.iter().enumerate() {
        lp.add_constraint((0..n).map(|k| (k * m + l, 1.0)).collect(), Relation::Eq, bl);
    }
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(EotError::numerical(sol.pivots, format!("OT program reported {:?}", sol.status)));
    }
    let plan = Array2::from_shape_fn((n, m), |(k, l)| sol.primal[k * m + l].max(0.0));
    let value = (&plan * cost).sum();
    Ok(OtSolution {
        value,
        plan,
        f: sol.duals[..n].to_vec(),
        g: sol.duals[n..].to_vec(),
    })
}

/// Utilitarian transport: `min_P sum_i <P_i, C_i>`, equal to OT under `min_i C_i`.
pub fn utilitarian_exact(a: &[f64], b: &[f64], family: &CostFamily) -> Result<f64> {
    family.check_marginals(a, b)?;
    let mut min_cost = family.matrix(0).clone();
    for c in &family.matrices()[1..] {
        min_cost.zip_mut_with(c, |o, &v| *o = o.min(v));
    }
    Ok(ot_exact(a, b, &min_cost)?.value)
}

/// Checks that `d` is a symmetric, zero-diagonal matrix with positive off-diagonal entries.
pub(crate) fn validate_metric(d: &Array2<f64>) -> Result<()> {
    let (n, m) = d.dim();
    if n != m {
        return Err(EotError::InvalidMetric(format!("distance matrix is {n}x{m}, not square")));
    }
    let scale = d.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    for ((i, j), &v) in d.indexed_iter() {
        if !v.is_finite() || v < 0.0 {
            return Err(EotError::InvalidMetric(format!("entry ({i}, {j}) = {v}")));
        }
        if i == j && v != 0.0 {
            return Err(EotError::InvalidMetric(format!("diagonal entry {i} is {v}")));
        }
        if i != j && v == 0.0 {
            return Err(EotError::InvalidMetric(format!(
                "distinct support points {i} and {j} are at distance 0"
            )));
        }
        if (v - d[[j, i]]).abs() > 1e-12 * scale {
            return Err(EotError::InvalidMetric(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
        }
    }
    Ok(())
}

/// Hölder IPM computed directly as an LP over test functions:
///
/// maximise `sum_i f_i (a_i - b_i)` subject to `|f_i - f_j| <= u D_ij^alpha`,
/// `|f_i| <= v`, `u + v <= 1`, `u, v >= 0`.
///
/// Serves as an independent route to the Dudley metric (`alpha = 1`).
pub fn dudley_ipm_exact(a: &[f64], b: &[f64], d: &Array2<f64>, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(EotError::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    validate_metric(d)?;
    let n = d.nrows();
    if a.len() != n || b.len() != n {
        return Err(EotError::DimensionError(format!(
            "weights ({}, {}) do not match a {n}-point support",
            a.len(),
            b.len()
        )));
    }
    let a = checked_weights(a, "a")?;
    let b = checked_weights(b, "b")?;
    let (u, v) = (n, n + 1);
    let mut objective: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    objective.extend([0.0, 0.0]);
    let mut lp = LinearProgram::maximize(objective);
    for i in 0..n {
        lp.set_free(i);
        lp.add_constraint(vec![(i, 1.0), (v, -1.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(i, -1.0), (v, -1.0)], Relation::Le, 0.0);
        for j in i + 1..n {
            let dij = d[[i, j]].powf(alpha);
            lp.add_constraint(vec![(i, 1.0), (j, -1.0), (u, -dij)], Relation::Le, 0.0);
            lp.add_constraint(vec![(j, 1.0), (i, -1.0), (u, -dij)], Relation::Le, 0.0);
        }
    }
    lp.add_constraint(vec![(u, 1.0), (v, 1.0)], Relation::Le, 1.0);
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(EotError::numerical(sol.pivots, format!("IPM program reported {:?}", sol.status)));
    }
    Ok(sol.value)
}

/// The EOT family `(2 * 1[x != y], D^alpha)` on a common support.
pub(crate) fn holder_family(d: &Array2<f64>, alpha: f64) -> Result<CostFamily> {
    let powered = d.mapv(|v| if v == 0.0 { 0.0 } else { v.powf(alpha) });
    CostFamily::new(vec![indicator_matrix(d.nrows(), 2.0), powered])
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
