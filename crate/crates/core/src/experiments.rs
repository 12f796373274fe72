//! Scenario generation and the two benchmark drivers: the epsilon sweep against the
//! exact value and the time/accuracy comparison of PAM, APGA and the LP.
//!
//! Randomness comes from a ChaCha8 stream seeded with `seed`. Points of `mu` are drawn
//! first, then points of `nu`, then one wind vector per day. Gaussian samples are
//! `mean + L z` with `L` the lower Cholesky factor of the covariance and `z` standard
//! normal; wind vectors are drawn uniformly from `[-1, 1]^2` and rejected outside the
//! unit disk.

use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::entropic::{solve, Algorithm, RegularizedProblem, SolveOptions};
use crate::error::{EotError, Result};
use crate::lp::{eot_exact, ot_exact};
use crate::measures::{build_cost_matrix, CostFamily, CostSpec, DiscreteMeasure};
use crate::metrics::relative_error;

/// Largest `n * m * N` for which the benchmark also runs the LP.
pub const LP_SIZE_CAP: usize = 40_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub m: usize,
    /// Number of days, one cost per day.
    pub num_days: usize,
    pub seed: u64,
    pub mean_mu: [f64; 2],
    pub mean_nu: [f64; 2],
    pub cov_mu: [[f64; 2]; 2],
    pub cov_nu: [[f64; 2]; 2],
    pub wind_coefficient: f64,
}

impl Default for ScenarioConfig {
    /// Source `N((3,3), I)`, target `N((4,4), [[1,-0.2],[-0.2,1]])`, wind coefficient 0.7.
    fn default() -> Self {
        Self {
            n: 30,
            m: 30,
            num_days: 2,
            seed: 0,
            mean_mu: [3.0, 3.0],
            mean_nu: [4.0, 4.0],
            cov_mu: [[1.0, 0.0], [0.0, 1.0]],
            cov_nu: [[1.0, -0.2], [-0.2, 1.0]],
            wind_coefficient: 0.7,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.num_days == 0 {
            return Err(EotError::InvalidParameter("n, m and the number of days must be positive".into()));
        }
        cholesky(&self.cov_mu)?;
        cholesky(&self.cov_nu)?;
        if !(0.0..1.0).contains(&self.wind_coefficient) {
            return Err(EotError::InvalidParameter(format!(
                "wind coefficient must lie in [0, 1), got {}",
                self.wind_coefficient
            )));
        }
        Ok(())
    }
}

/// Lower Cholesky factor of a symmetric positive-definite 2x2 matrix.
fn cholesky(c: &[[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let symmetric = c[0][1] == c[1][0];
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    if !symmetric || !(c[0][0] > 0.0) || !(det > 0.0) || c.iter().flatten().any(|v| !v.is_finite()) {
        return Err(EotError::InvalidParameter(format!(
            "covariance {c:?} is not symmetric positive definite"
        )));
    }
    let l00 = c[0][0].sqrt();
    let l10 = c[1][0] / l00;
    let l11 = (c[1][1] - l10 * l10).sqrt();
    Ok([[l00, 0.0], [l10, l11]])
}

fn sample_gaussian(rng: &mut ChaCha8Rng, count: usize, mean: &[f64; 2], chol: &[[f64; 2]; 2]) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            vec![mean[0] + chol[0][0] * z0, mean[1] + chol[1][0] * z0 + chol[1][1] * z1]
        })
        .collect()
}

fn sample_unit_disk(rng: &mut ChaCha8Rng) -> [f64; 2] {
    loop {
        let w = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        if w[0] * w[0] + w[1] * w[1] <= 1.0 {
            return w;
        }
    }
}

/// Two uniform point clouds and a cost family over them.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub family: CostFamily,
    /// One wind vector per day (empty for the Dudley setup).
    pub winds: Vec<[f64; 2]>,
}

/// Sequential transport over `num_days` days: day `i` costs
/// `|y - x| - wind_coefficient * <w_i, y - x>` with `w_i` uniform on the unit disk.
pub fn gen_sequential_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let xs = sample_gaussian(&mut rng, cfg.n, &cfg.mean_mu, &cholesky(&cfg.cov_mu)?);
    let ys = sample_gaussian(&mut rng, cfg.m, &cfg.mean_nu, &cholesky(&cfg.cov_nu)?);
    let winds: Vec<[f64; 2]> = (0..cfg.num_days).map(|_| sample_unit_disk(&mut rng)).collect();
    let matrices = winds
        .iter()
        .map(|w| {
            let spec = CostSpec::Wind {
                direction: w.to_vec(),
                coefficient: cfg.wind_coefficient,
            };
            build_cost_matrix(&spec, &xs, &ys)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        mu: DiscreteMeasure::uniform(xs)?,
        nu: DiscreteMeasure::uniform(ys)?,
        family: CostFamily::new(matrices)?,
        winds,
    })
}

/// Dudley setup: point clouds drawn as in `cfg` (wind settings ignored) with the two
/// costs `2 * 1[x != y]` and the Euclidean distance.
pub fn gen_dudley_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let xs = sample_gaussian(&mut rng, cfg.n, &cfg.mean_mu, &cholesky(&cfg.cov_mu)?);
    let ys = sample_gaussian(&mut rng, cfg.m, &cfg.mean_nu, &cholesky(&cfg.cov_nu)?);
    let indicator = build_cost_matrix(&CostSpec::ScaledIndicator { scale: 2.0 }, &xs, &ys)?;
    let distance = build_cost_matrix(&CostSpec::Euclidean, &xs, &ys)?;
    Ok(Scenario {
        mu: DiscreteMeasure::uniform(xs)?,
        nu: DiscreteMeasure::uniform(ys)?,
        family: CostFamily::new(vec![indicator, distance])?,
        winds: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub dual_value: f64,
    /// Value of the rounded, exactly feasible plans.
    pub primal_value: f64,
    /// Relative error of `primal_value` against the exact value.
    pub relative_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    /// Solver failure for this row, if any; the numeric fields are NaN then.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Exact value (OT for a single cost, EOT otherwise).
    pub exact_value: f64,
    pub rows: Vec<SweepRow>,
}

/// Solves the entropic problem for each epsilon (strictly decreasing) and compares the
/// rounded primal value with the exact one.
pub fn sweep_epsilon(
    a: &[f64],
    b: &[f64],
    family: &CostFamily,
    eps_list: &[f64],
    algorithm: Algorithm,
    opts: &SolveOptions,
) -> Result<SweepResult> {
    if eps_list.is_empty() {
        return Err(EotError::InvalidParameter("empty epsilon list".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(EotError::InvalidParameter("epsilons must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(EotError::InvalidParameter("epsilons must be strictly decreasing".into()));
    }
    opts.validate()?;
    let exact_value = if family.len() == 1 {
        ot_exact(a, b, family.matrix(0))?.value
    } else {
        eot_exact(a, b, family)?.value
    };
    let rows = eps_list
        .iter()
        .map(|&epsilon| {
            let outcome = RegularizedProblem::new(a, b, family.clone(), epsilon).and_then(|prob| {
                let start = Instant::now();
                let report = solve(&prob, algorithm, opts)?;
                Ok((report, start.elapsed().as_secs_f64()))
            });
            match outcome {
                Ok((report, wall_time_s)) => SweepRow {
                    epsilon,
                    dual_value: report.dual_value,
                    primal_value: report.primal_value,
                    relative_error: relative_error(report.primal_value, exact_value).unwrap_or(f64::NAN),
                    iterations: report.iterations,
                    converged: report.converged,
                    wall_time_s,
                    error: None,
                },
                Err(e) => SweepRow {
                    epsilon,
                    dual_value: f64::NAN,
                    primal_value: f64::NAN,
                    relative_error: f64::NAN,
                    iterations: 0,
                    converged: false,
                    wall_time_s: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepResult { exact_value, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchSolver {
    Pam,
    Apga,
    Lp,
}

impl std::fmt::Display for BenchSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BenchSolver::Pam => "pam",
            BenchSolver::Apga => "apga",
            BenchSolver::Lp => "lp",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    /// Index into the config list.
    pub config: usize,
    pub solver: BenchSolver,
    pub n: usize,
    pub m: usize,
    pub num_days: usize,
    pub epsilon: f64,
    /// Final dual value for PAM/APGA, exact value for the LP.
    pub value: f64,
    /// Value of the rounded plans (the exact value for the LP).
    pub primal_value: f64,
    pub iterations: usize,
    pub time_s: f64,
    /// `(elapsed seconds, dual value)` samples taken from the solver trace.
    pub trajectory: Vec<(f64, f64)>,
    /// Exact value, when the LP was run for this config.
    pub oracle: Option<f64>,
    /// `|value - oracle| / |oracle|`
    pub relative_gap: Option<f64>,
    /// `no-oracle` when the config is above [`LP_SIZE_CAP`].
    pub flag: Option<String>,
    pub error: Option<String>,
}

impl BenchRow {
    fn empty(config: usize, solver: BenchSolver, cfg: &ScenarioConfig, epsilon: f64) -> Self {
        Self {
            config,
            solver,
            n: cfg.n,
            m: cfg.m,
            num_days: cfg.num_days,
            epsilon,
            value: f64::NAN,
            primal_value: f64::NAN,
            iterations: 0,
            time_s: f64::NAN,
            trajectory: Vec::new(),
            oracle: None,
            relative_gap: None,
            flag: None,
            error: None,
        }
    }
}

/// For each `(config, epsilon)`: PAM and APGA rows, plus an LP row when
/// `n * m * N <= LP_SIZE_CAP`. Failures are captured per row.
pub fn time_accuracy_benchmark(configs: &[(ScenarioConfig, f64)], opts: &SolveOptions) -> Result<Vec<BenchRow>> {
    opts.validate()?;
    let mut rows = Vec::new();
    for (idx, (cfg, epsilon)) in configs.iter().enumerate() {
        let scenario = match gen_sequential_scenario(cfg) {
            Ok(s) => s,
            Err(e) => {
                let mut row = BenchRow::empty(idx, BenchSolver::Lp, cfg, *epsilon);
                row.error = Some(e.to_string());
                rows.push(row);
                continue;
            }
        };
        let (a, b) = (scenario.mu.weights(), scenario.nu.weights());
        let size = cfg.n * cfg.m * cfg.num_days;
        let mut oracle = None;
        let mut lp_row = None;
        if size <= LP_SIZE_CAP {
            let mut row = BenchRow::empty(idx, BenchSolver::Lp, cfg, *epsilon);
            let start = Instant::now();
            match eot_exact(a, b, &scenario.family) {
                Ok(res) => {
                    row.time_s = start.elapsed().as_secs_f64();
                    row.value = res.value;
                    row.primal_value = res.value;
                    row.trajectory = vec![(row.time_s, res.value)];
                    row.oracle = Some(res.value);
                    row.relative_gap = Some(0.0);
                    oracle = Some(res.value);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            lp_row = Some(row);
        }
        for (solver, algorithm) in [(BenchSolver::Pam, Algorithm::Pam), (BenchSolver::Apga, Algorithm::Apga)] {
            let mut row = BenchRow::empty(idx, solver, cfg, *epsilon);
            let outcome = RegularizedProblem::new(a, b, scenario.family.clone(), *epsilon).and_then(|prob| {
                let start = Instant::now();
                let report = solve(&prob, algorithm, opts)?;
                Ok((report, start.elapsed().as_secs_f64()))
            });
            match outcome {
                Ok((report, time_s)) => {
                    row.value = report.dual_value;
                    row.primal_value = report.primal_value;
                    row.iterations = report.iterations;
                    row.time_s = time_s;
                    row.trajectory = report.trace.iter().map(|t| (t.elapsed_s, t.dual_value)).collect();
                    row.oracle = oracle;
                    row.relative_gap = oracle.map(|o| (report.dual_value - o).abs() / o.abs());
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            if size > LP_SIZE_CAP {
                row.flag = Some("no-oracle".into());
            }
            rows.push(row);
        }
        rows.extend(lp_row);
    }
    Ok(rows)
}

/// Euclidean distance matrix between two point sets.
pub fn distance_matrix(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Array2<f64>> {
    build_cost_matrix(&CostSpec::Euclidean, xs, ys)
}
