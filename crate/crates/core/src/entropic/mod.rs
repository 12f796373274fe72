//! Entropic relaxation of EOT.
//!
//! With a single regularisation strength `eps` the relaxed problem has the smooth
//! concave dual
//!
//! ```text
//! F(lambda, f, g) = <f, a> + <g, b> - eps * (log sum_{i,k,l} exp((f_k + g_l - lambda_i C_i[k,l]) / eps) + 1)
//! ```
//!
//! maximised over `lambda` in the simplex and unconstrained potentials `f`, `g`.
//! Every exponential is taken in the log domain with the global maximum
//! subtracted, so tiny `eps` never overflows.

mod objective;
mod primal;
mod projection;
mod sinkhorn;
mod solvers;

pub use objective::{grad_f, lipschitz_l, objective_f, DualGradient};
pub use primal::{recover_primal, round_to_feasible};
pub use projection::simplex_project;
pub use sinkhorn::{sinkhorn_baseline, SinkhornResult};
pub use solvers::{apga_solve, pam_solve, solve};

use crate::error::{EotError, Result};
use crate::lp::checked_weights;
use crate::measures::{CostFamily, CouplingFamily};

/// Dual variables `(lambda, f, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl DualState {
    /// `f = 0`, `g = 0`, `lambda` uniform.
    pub fn initial(num_costs: usize, n: usize, m: usize) -> Self {
        Self {
            lambda: vec![1.0 / num_costs as f64; num_costs],
            f: vec![0.0; n],
            g: vec![0.0; m],
        }
    }

    pub fn for_problem(prob: &RegularizedProblem) -> Self {
        Self::initial(prob.family.len(), prob.a.len(), prob.b.len())
    }

    fn check(&self, prob: &RegularizedProblem) -> Result<()> {
        if self.lambda.len() != prob.family.len() || self.f.len() != prob.a.len() || self.g.len() != prob.b.len() {
            return Err(EotError::DimensionError(format!(
                "state has shape ({}, {}, {}), problem expects ({}, {}, {})",
                self.lambda.len(),
                self.f.len(),
                self.g.len(),
                prob.family.len(),
                prob.a.len(),
                prob.b.len()
            )));
        }
        Ok(())
    }
}

/// Marginals, costs and the (single) regularisation strength.
#[derive(Debug, Clone)]
pub struct RegularizedProblem {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub family: CostFamily,
    pub epsilon: f64,
}

impl RegularizedProblem {
    pub fn new(a: &[f64], b: &[f64], family: CostFamily, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(EotError::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        family.check_marginals(a, b)?;
        let a = checked_weights(a, "a")?;
        let b = checked_weights(b, "b")?;
        if let Some(k) = a.iter().chain(&b).position(|&w| w <= 0.0) {
            return Err(EotError::NotStrictlyPositive { index: k });
        }
        Ok(Self { a, b, family, epsilon })
    }

    /// Accepts one strength per cost; only the all-equal case is supported.
    pub fn with_epsilons(a: &[f64], b: &[f64], family: CostFamily, epsilons: &[f64]) -> Result<Self> {
        if epsilons.len() != family.len() {
            return Err(EotError::DimensionError(format!(
                "{} epsilons for {} costs",
                epsilons.len(),
                family.len()
            )));
        }
        let first = epsilons[0];
        if epsilons.iter().any(|&e| e != first) {
            return Err(EotError::InvalidParameter(
                "per-cost regularisation strengths must all be equal".into(),
            ));
        }
        Self::new(a, b, family, first)
    }

    pub fn num_costs(&self) -> usize {
        self.family.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Projected alternating maximisation.
    Pam,
    /// Accelerated projected gradient ascent.
    Apga,
}

impl std::str::FromStr for Algorithm {
    type Err = EotError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pam" => Ok(Algorithm::Pam),
            "apga" => Ok(Algorithm::Apga),
            other => Err(EotError::InvalidParameter(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Pam => "pam",
            Algorithm::Apga => "apga",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Threshold on the L1 marginal residual of `sum_i P_i`.
    pub tol: f64,
    /// Threshold on the dual-value change over the last [`VALUE_WINDOW`] iterations,
    /// relative to `max(1, |F|)`.
    pub value_tol: f64,
    /// Record a trace row every `trace_every` iterations (0 disables the trace).
    pub trace_every: usize,
}

/// Number of iterations over which the dual-value change is measured.
pub const VALUE_WINDOW: usize = 10;

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            tol: 1e-9,
            value_tol: 1e-12,
            trace_every: 1,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(EotError::InvalidParameter("max_iter must be positive".into()));
        }
        if !(self.tol > 0.0) || !(self.value_tol > 0.0) {
            return Err(EotError::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub dual_value: f64,
    pub residual: f64,
    /// Seconds since the solver started (not part of the deterministic output).
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    /// `F` at the final iterate.
    pub dual_value: f64,
    /// `max_i <P_i, C_i>` of the recovered plans after rounding onto the coupling set.
    pub primal_value: f64,
    /// `max_i <P_i, C_i> + eps * sum_i sum P_i (log P_i - 1)` of the recovered (unrounded) plans.
    pub reg_primal_value: f64,
    /// L1 marginal residual of the recovered plans before rounding.
    pub marginal_residual: f64,
    /// Per-cost values of the rounded plans.
    pub per_cost_values: Vec<f64>,
    pub lambda_final: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
    pub state: DualState,
    /// Rounded plans, exactly feasible.
    pub plans: CouplingFamily,
}
