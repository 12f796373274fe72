use super::{DualState, RegularizedProblem};
use crate::error::Result;
use crate::measures::CostFamily;

/// Fills `out[(i * n + k) * m + l]` with the scaled scores
/// `(f_k + g_l - lambda_i C_i[k,l]) / eps` and returns their maximum.
pub(crate) fn scores(prob: &RegularizedProblem, lambda: &[f64], f: &[f64], g: &[f64], out: &mut Vec<f64>) -> f64 {
    let (n, m) = (prob.a.len(), prob.b.len());
    let inv = 1.0 / prob.epsilon;
    out.clear();
    out.reserve(prob.family.len() * n * m);
    let mut max = f64::NEG_INFINITY;
    for (c, &lam) in prob.family.matrices().iter().zip(lambda) {
        let c = c.as_slice().expect("cost matrices are stored in standard layout");
        for k in 0..n {
            let row = &c[k * m..(k + 1) * m];
            for (l, &cost) in row.iter().enumerate() {
                let s = (f[k] + g[l] - lam * cost) * inv;
                max = max.max(s);
                out.push(s);
            }
        }
    }
    max
}

/// Turns scores into softmax weights in place and returns `log sum exp(scores)`.
/// Summation runs in a fixed order so results are reproducible.
pub(crate) fn softmax_in_place(buf: &mut [f64], max: f64) -> f64 {
    if max == f64::INFINITY || max.is_nan() {
        return f64::NAN;
    }
    let mut total = 0.0;
    for v in buf.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    let inv = 1.0 / total;
    buf.iter_mut().for_each(|v| *v *= inv);
    max + total.ln()
}

/// Softmax plans at a state, with the log-partition value.
pub(crate) struct Plans {
    pub log_z: f64,
    /// Flat `N x n x m` probabilities summing to one.
    pub weights: Vec<f64>,
}

pub(crate) fn plans_at(prob: &RegularizedProblem, lambda: &[f64], f: &[f64], g: &[f64], buf: Vec<f64>) -> Plans {
    let mut weights = buf;
    let max = scores(prob, lambda, f, g, &mut weights);
    let log_z = softmax_in_place(&mut weights, max);
    Plans { log_z, weights }
}

pub(crate) fn dual_value(prob: &RegularizedProblem, f: &[f64], g: &[f64], log_z: f64) -> f64 {
    dot(f, &prob.a) + dot(g, &prob.b) - prob.epsilon * (log_z + 1.0)
}

/// Row and column marginals of `sum_i P_i` from flat softmax weights.
pub(crate) fn marginals(weights: &[f64], num_costs: usize, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; m];
    for i in 0..num_costs {
        for k in 0..n {
            let base = (i * n + k) * m;
            let slab = &weights[base..base + m];
            let mut rs = 0.0;
            for (c, &p) in cols.iter_mut().zip(slab) {
                *c += p;
                rs += p;
            }
            rows[k] += rs;
        }
    }
    (rows, cols)
}

/// `<P_i, C_i>` for every cost from flat softmax weights.
pub(crate) fn cost_values(weights: &[f64], family: &CostFamily) -> Vec<f64> {
    let nm = family.rows() * family.cols();
    family
        .matrices()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let c = c.as_slice().expect("standard layout");
            dot(&weights[i * nm..(i + 1) * nm], c)
        })
        .collect()
}

pub(crate) fn l1_residual(rows: &[f64], cols: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let dr: f64 = rows.iter().zip(a).map(|(x, y)| (x - y).abs()).sum();
    let dc: f64 = cols.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    dr + dc
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// The smoothed dual objective `F(lambda, f, g)`, evaluated in the log domain.
pub fn objective_f(state: &DualState, prob: &RegularizedProblem) -> Result<f64> {
    state.check(prob)?;
    let mut buf = Vec::new();
    let max = scores(prob, &state.lambda, &state.f, &state.g, &mut buf);
    // log-sum-exp without normalising the buffer
    let total: f64 = buf.iter().map(|s| (s - max).exp()).sum();
    Ok(dual_value(prob, &state.f, &state.g, max + total.ln()))
}

/// Gradient of `F` split by block.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGradient {
    /// `<P_i, C_i>`
    pub lambda: Vec<f64>,
    /// `a - rows(sum_i P_i)`
    pub f: Vec<f64>,
    /// `b - cols(sum_i P_i)`
    pub g: Vec<f64>,
}

impl DualGradient {
    pub fn norm(&self) -> f64 {
        self.lambda
            .iter()
            .chain(&self.f)
            .chain(&self.g)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// Gradient of `F` where `P_i` are the softmax plans of the state.
pub fn grad_f(state: &DualState, prob: &RegularizedProblem) -> Result<DualGradient> {
    state.check(prob)?;
    let plans = plans_at(prob, &state.lambda, &state.f, &state.g, Vec::new());
    Ok(gradient_from_plans(prob, &plans.weights))
}

pub(crate) fn gradient_from_plans(prob: &RegularizedProblem, weights: &[f64]) -> DualGradient {
    let (n, m) = (prob.a.len(), prob.b.len());
    let (rows, cols) = marginals(weights, prob.family.len(), n, m);
    DualGradient {
        lambda: cost_values(weights, &prob.family),
        f: prob.a.iter().zip(&rows).map(|(x, r)| x - r).collect(),
        g: prob.b.iter().zip(&cols).map(|(x, c)| x - c).collect(),
    }
}

/// Lipschitz constant of `grad F`: `max(max_i |C_i|_inf^2, 2N) / eps`.
pub fn lipschitz_l(family: &CostFamily, epsilon: f64) -> f64 {
    let sup = family.sup_norm();
    (sup * sup).max(2.0 * family.len() as f64) / epsilon
}
