use std::time::Instant;

use super::objective::{cost_values, dual_value, gradient_from_plans, l1_residual, lipschitz_l, marginals, plans_at, Plans};
use super::primal::{round_impl, unflatten};
use super::projection::simplex_project;
use super::{Algorithm, DualState, RegularizedProblem, SolveOptions, SolveReport, TraceEntry, VALUE_WINDOW};
use crate::error::{EotError, Result};

/// Runs the chosen algorithm.
pub fn solve(prob: &RegularizedProblem, algorithm: Algorithm, opts: &SolveOptions) -> Result<SolveReport> {
    match algorithm {
        Algorithm::Pam => pam_solve(prob, opts),
        Algorithm::Apga => apga_solve(prob, opts),
    }
}

/// Book-keeping shared by both solvers: value history, trace and the stopping rule.
struct Monitor<'a> {
    opts: &'a SolveOptions,
    start: Instant,
    history: Vec<f64>,
    trace: Vec<TraceEntry>,
}

impl<'a> Monitor<'a> {
    fn new(opts: &'a SolveOptions) -> Self {
        Self {
            opts,
            start: Instant::now(),
            history: Vec::new(),
            trace: Vec::new(),
        }
    }

    /// Records iteration `it` and reports whether the stopping rule holds.
    fn record(&mut self, it: usize, value: f64, residual: f64) -> Result<bool> {
        if !value.is_finite() || !residual.is_finite() {
            return Err(EotError::numerical(it, "non-finite dual value"));
        }
        self.history.push(value);
        if self.opts.trace_every > 0 && it % self.opts.trace_every == 0 {
            self.push_trace(it, value, residual);
        }
        if residual > self.opts.tol || self.history.len() <= VALUE_WINDOW {
            return Ok(false);
        }
        let old = self.history[self.history.len() - 1 - VALUE_WINDOW];
        Ok((value - old).abs() <= self.opts.value_tol * value.abs().max(1.0))
    }

    fn push_trace(&mut self, iteration: usize, dual_value: f64, residual: f64) {
        if self.trace.last().map(|t| t.iteration) == Some(iteration) {
            return;
        }
        self.trace.push(TraceEntry {
            iteration,
            dual_value,
            residual,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        });
    }
}

/// Value and marginal residual of the softmax plans.
fn evaluate(prob: &RegularizedProblem, state: &DualState, plans: &Plans) -> (f64, f64) {
    let (n, m) = (prob.a.len(), prob.b.len());
    let (rows, cols) = marginals(&plans.weights, prob.family.len(), n, m);
    let value = dual_value(prob, &state.f, &state.g, plans.log_z);
    (value, l1_residual(&rows, &cols, &prob.a, &prob.b))
}

/// Projected alternating maximisation.
///
/// Each sweep maximises `F` exactly in `f`, then in `g` (log-domain Sinkhorn-type updates
/// that keep the partition function fixed), then takes a projected gradient step in
/// `lambda` with step `1 / L_lambda`, `L_lambda = max_i |C_i|_inf^2 / eps`. The dual value
/// never decreases.
pub fn pam_solve(prob: &RegularizedProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let (num, n, m) = (prob.family.len(), prob.a.len(), prob.b.len());
    let eps = prob.epsilon;
    let inv = 1.0 / eps;
    let sup = prob.family.sup_norm();
    let l_lambda = sup * sup / eps;
    let log_a: Vec<f64> = prob.a.iter().map(|v| v.ln()).collect();
    let log_b: Vec<f64> = prob.b.iter().map(|v| v.ln()).collect();
    let costs: Vec<&[f64]> = prob
        .family
        .matrices()
        .iter()
        .map(|c| c.as_slice().expect("standard layout"))
        .collect();

    let mut state = DualState::for_problem(prob);
    let mut plans = plans_at(prob, &state.lambda, &state.f, &state.g, Vec::new());
    let mut monitor = Monitor::new(opts);
    let (v0, r0) = evaluate(prob, &state, &plans);
    if opts.trace_every > 0 {
        monitor.push_trace(0, v0, r0);
    }
    let mut scratch = vec![0.0; num * n.max(m)];
    let mut converged = false;
    let mut it = 0;
    let mut last = (v0, r0);

    while it < opts.max_iter {
        it += 1;
        let log_z = plans.log_z;

        // f_k = eps (log a_k - LSE_{i,l}((g_l - lambda_i C_i[k,l]) / eps) + log Z)
        for k in 0..n {
            let s = &mut scratch[..num * m];
            for (i, c) in costs.iter().enumerate() {
                let lam = state.lambda[i];
                let row = &c[k * m..(k + 1) * m];
                for l in 0..m {
                    s[i * m + l] = (state.g[l] - lam * row[l]) * inv;
                }
            }
            state.f[k] = eps * (log_a[k] - lse(s) + log_z);
        }
        for l in 0..m {
            let s = &mut scratch[..num * n];
            for (i, c) in costs.iter().enumerate() {
                let lam = state.lambda[i];
                for k in 0..n {
                    s[i * n + k] = (state.f[k] - lam * c[k * m + l]) * inv;
                }
            }
            state.g[l] = eps * (log_b[l] - lse(s) + log_z);
        }

        plans = plans_at(prob, &state.lambda, &state.f, &state.g, std::mem::take(&mut plans.weights));
        if num > 1 && l_lambda > 0.0 {
            let grad = cost_values(&plans.weights, &prob.family);
            let step: Vec<f64> = state.lambda.iter().zip(&grad).map(|(l, d)| l + d / l_lambda).collect();
            let next = simplex_project(&step);
            if next != state.lambda {
                state.lambda = next;
                plans = plans_at(prob, &state.lambda, &state.f, &state.g, std::mem::take(&mut plans.weights));
            }
        }
        last = evaluate(prob, &state, &plans);
        if monitor.record(it, last.0, last.1)? {
            converged = true;
            break;
        }
    }
    finish(prob, Algorithm::Pam, state, plans, last, it, converged, monitor)
}

/// Accelerated projected gradient ascent with momentum `(k - 2) / (k + 1)` and step `1 / L`.
pub fn apga_solve(prob: &RegularizedProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let l = lipschitz_l(&prob.family, prob.epsilon);
    let mut state = DualState::for_problem(prob);
    let mut prev = state.clone();
    let mut plans = plans_at(prob, &state.lambda, &state.f, &state.g, Vec::new());
    let mut monitor = Monitor::new(opts);
    let (v0, r0) = evaluate(prob, &state, &plans);
    if opts.trace_every > 0 {
        monitor.push_trace(0, v0, r0);
    }
    let mut converged = false;
    let mut it = 0;
    let mut last = (v0, r0);

    while it < opts.max_iter {
        it += 1;
        let beta = (it as f64 - 2.0) / (it as f64 + 1.0);
        let extrapolate = |x: &[f64], xp: &[f64]| -> Vec<f64> { x.iter().zip(xp).map(|(a, b)| a + beta * (a - b)).collect() };
        let y = DualState {
            lambda: extrapolate(&state.lambda, &prev.lambda),
            f: extrapolate(&state.f, &prev.f),
            g: extrapolate(&state.g, &prev.g),
        };
        let at_y = plans_at(prob, &y.lambda, &y.f, &y.g, std::mem::take(&mut plans.weights));
        let grad = gradient_from_plans(prob, &at_y.weights);
        let ascend = |x: &[f64], d: &[f64]| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + b / l).collect() };
        let next = DualState {
            lambda: simplex_project(&ascend(&y.lambda, &grad.lambda)),
            f: ascend(&y.f, &grad.f),
            g: ascend(&y.g, &grad.g),
        };
        prev = std::mem::replace(&mut state, next);
        plans = plans_at(prob, &state.lambda, &state.f, &state.g, at_y.weights);
        last = evaluate(prob, &state, &plans);
        if monitor.record(it, last.0, last.1)? {
            converged = true;
            break;
        }
    }
    finish(prob, Algorithm::Apga, state, plans, last, it, converged, monitor)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    prob: &RegularizedProblem,
    algorithm: Algorithm,
    state: DualState,
    plans: Plans,
    (dual_value, residual): (f64, f64),
    iterations: usize,
    converged: bool,
    mut monitor: Monitor<'_>,
) -> Result<SolveReport> {
    if !plans.log_z.is_finite() {
        return Err(EotError::numerical(iterations, "non-finite log-partition"));
    }
    if monitor.opts.trace_every > 0 {
        monitor.push_trace(iterations, dual_value, residual);
    }
    let raw_values = cost_values(&plans.weights, &prob.family);
    let entropy: f64 = plans
        .weights
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * (p.ln() - 1.0))
        .sum();
    let reg_primal_value = max_of(&raw_values) + prob.epsilon * entropy;
    let (num, n, m) = (prob.family.len(), prob.a.len(), prob.b.len());
    let raw = unflatten(plans.weights, num, n, m);
    let rounded = round_impl(&raw, &prob.a, &prob.b, &prob.family, false)?;
    let per_cost_values = rounded.per_cost_values(&prob.family);
    Ok(SolveReport {
        algorithm,
        dual_value,
        primal_value: max_of(&per_cost_values),
        reg_primal_value,
        marginal_residual: residual,
        per_cost_values,
        lambda_final: state.lambda.clone(),
        iterations,
        converged,
        trace: monitor.trace,
        state,
        plans: rounded,
    })
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn lse(s: &[f64]) -> f64 {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
