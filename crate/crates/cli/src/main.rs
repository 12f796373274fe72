//! `eot`: exact and entropic equitable transport from the command line.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.

mod input;
mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eot_core::entropic::{solve, Algorithm, RegularizedProblem, SolveOptions};
use eot_core::experiments::{
    gen_dudley_scenario, gen_sequential_scenario, sweep_epsilon, time_accuracy_benchmark, ScenarioConfig,
};
use eot_core::lp::{dudley_ipm_exact, eot_exact};
use eot_core::measures::{write_measure_csv, DiscreteMeasure};
use eot_core::metrics::holder_ipm;
use eot_core::experiments::distance_matrix;

use input::{check_epsilon, load_measure, parse_list, InputArgs, ScenarioDefaults, ScenarioKind};
use output::{matrix_csv, num, Outputs, Table};
use plot::{Chart, Series, Style};

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numerical(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(msg) => write!(f, "input error: {msg}"),
            Failure::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "eot", version, about = "Equitable and optimal transport solvers")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for every generated scenario.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write an SVG chart.
    #[arg(long, global = true)]
    plot: bool,
    /// Log progress to stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Solver for the regularized dual.
    #[arg(long, default_value = "pam")]
    algo: Algorithm,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Threshold on the L1 marginal residual.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Threshold on the relative dual-value change over 10 iterations.
    #[arg(long, default_value_t = 1e-12)]
    value_tol: f64,
}

impl SolverArgs {
    fn options(&self, trace_every: usize) -> SolveOptions {
        SolveOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            value_tol: self.value_tol,
            trace_every,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the EOT linear program exactly.
    SolveExact {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Solve the entropic relaxation with PAM or APGA.
    SolveEntropic {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Regularization strength.
        #[arg(long)]
        eps: f64,
        /// Record every k-th iteration in trace.csv.
        #[arg(long, default_value_t = 1)]
        trace_every: usize,
    },
    /// Dudley metric or Hölder IPM between two weightings of one support.
    Dudley {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// Hölder exponent in (0, 1]; 1 gives the Dudley metric.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Relative error of the entropic solution across a decreasing epsilon grid.
    SweepEps {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Absolute epsilons, comma-separated and decreasing.
        #[arg(long, conflicts_with = "eps_rel")]
        eps: Option<String>,
        /// Epsilons as multiples of the largest cost entry.
        #[arg(long, default_value = "0.5,0.1,0.05,0.01,0.005")]
        eps_rel: String,
        /// Write NaN instead of wall times so repeated runs are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Time/accuracy comparison of PAM, APGA and the LP on sequential scenarios.
    Bench {
        /// `NxMxDAYS:EPS`, repeatable.
        #[arg(long = "config", default_value = "30x30x2:0.05")]
        configs: Vec<String>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Keep every k-th iteration in the trajectories.
        #[arg(long, default_value_t = 10)]
        trace_every: usize,
        #[arg(long)]
        wind: Option<f64>,
    },
    /// Write a generated scenario to disk.
    Scenario {
        #[arg(long, value_enum, default_value = "sequential")]
        kind: ScenarioKind,
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 30)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        days: usize,
        #[arg(long)]
        wind: Option<f64>,
    },
}

const EXACT_DEFAULTS: ScenarioDefaults = ScenarioDefaults {
    kind: ScenarioKind::Sequential,
    n: 10,
    m: 10,
    days: 2,
};

const SWEEP_DEFAULTS: ScenarioDefaults = ScenarioDefaults {
    kind: ScenarioKind::Dudley,
    n: 20,
    m: 20,
    days: 1,
};

fn indexed(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}_{i}"))
}

/// CSV-safe free text.
fn text(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

fn solve_exact(common: &Common, input: &InputArgs) -> Result<Outputs, Failure> {
    let prob = input.load(common.seed, EXACT_DEFAULTS)?;
    let res = eot_exact(prob.mu.weights(), prob.nu.weights(), &prob.family)?;
    let n = prob.family.len();
    let header: Vec<String> = ["value".to_string()]
        .into_iter()
        .chain(indexed("cost", n))
        .chain(indexed("lambda", n))
        .collect();
    let mut table = Table::new(&header);
    let row: Vec<String> = std::iter::once(res.value)
        .chain(res.per_cost_values.iter().copied())
        .chain(res.lambda.iter().copied())
        .map(num)
        .collect();
    table.row(&row);
    let mut out = Outputs::default();
    out.add("eot_exact.csv", table.into_string());
    for (i, plan) in res.couplings.plans().iter().enumerate() {
        out.add(format!("plan_{}.csv", i + 1), matrix_csv(plan));
    }
    println!("eot value {}", num(res.value));
    Ok(out)
}

fn solve_entropic(
    common: &Common,
    input: &InputArgs,
    solver: &SolverArgs,
    eps: f64,
    trace_every: usize,
) -> Result<Outputs, Failure> {
    let eps = check_epsilon(eps)?;
    let prob = input.load(common.seed, EXACT_DEFAULTS)?;
    let prob = RegularizedProblem::new(prob.mu.weights(), prob.nu.weights(), prob.family, eps)?;
    let report = solve(&prob, solver.algo, &solver.options(trace_every))?;
    if common.verbose {
        let stride = (report.trace.len() / 20).max(1);
        for t in report.trace.iter().step_by(stride) {
            eprintln!("iter {:>7}  dual {:.12e}  residual {:.3e}", t.iteration, t.dual_value, t.residual);
        }
    }
    if !report.converged {
        eprintln!("warning: {} stopped after {} iterations without converging", solver.algo, report.iterations);
    }
    let n = report.lambda_final.len();
    let header: Vec<String> = ["value_dual", "value_primal", "marginal_residual", "iterations"]
        .iter()
        .map(|s| s.to_string())
        .chain(indexed("lambda", n))
        .collect();
    let mut table = Table::new(&header);
    let row: Vec<String> = [
        num(report.dual_value),
        num(report.primal_value),
        num(report.marginal_residual),
        report.iterations.to_string(),
    ]
    .into_iter()
    .chain(report.lambda_final.iter().map(|v| num(*v)))
    .collect();
    table.row(&row);
    let mut trace = Table::new(&["iter", "dual_value", "residual"]);
    for t in &report.trace {
        trace.row(&[t.iteration.to_string(), num(t.dual_value), num(t.residual)]);
    }
    let mut out = Outputs::default();
    out.add("report.csv", table.into_string());
    out.add("trace.csv", trace.into_string());
    if common.plot {
        let chart = Chart {
            title: format!("{} dual value, eps = {}", solver.algo, num(eps)),
            x_label: "iteration".into(),
            y_label: "dual value".into(),
            log_x: false,
            series: vec![Series {
                name: solver.algo.to_string(),
                points: report.trace.iter().map(|t| (t.iteration as f64, t.dual_value)).collect(),
                style: Style::Line,
            }],
        };
        out.add("trace.svg", chart.render());
    }
    println!(
        "dual {}  primal {}  iterations {}",
        num(report.dual_value),
        num(report.primal_value),
        report.iterations
    );
    Ok(out)
}

fn dudley_cmd(mu: &Path, nu: &Path, alpha: f64) -> Result<Outputs, Failure> {
    let mu = load_measure(mu)?;
    let nu = load_measure(nu)?;
    if mu.points() != nu.points() {
        return Err(Failure::Input("both measures must list the same support points in the same order".into()));
    }
    let d = distance_matrix(mu.points(), mu.points())?;
    let via_eot = holder_ipm(mu.weights(), nu.weights(), &d, alpha)?;
    let via_ipm = dudley_ipm_exact(mu.weights(), nu.weights(), &d, alpha)?;
    let mut table = Table::new(&["alpha", "value_eot", "value_ipm"]);
    table.row(&[num(alpha), num(via_eot), num(via_ipm)]);
    let mut out = Outputs::default();
    out.add("dudley.csv", table.into_string());
    println!("eot route {}  ipm route {}", num(via_eot), num(via_ipm));
    Ok(out)
}

fn sweep_cmd(
    common: &Common,
    input: &InputArgs,
    solver: &SolverArgs,
    eps: Option<&str>,
    eps_rel: &str,
    no_timing: bool,
) -> Result<Outputs, Failure> {
    let prob = input.load(common.seed, SWEEP_DEFAULTS)?;
    let eps_list = match eps {
        Some(raw) => parse_list(raw, "--eps")?,
        None => {
            let sup = prob.family.sup_norm();
            parse_list(eps_rel, "--eps-rel")?.into_iter().map(|f| f * sup).collect()
        }
    };
    let res = sweep_epsilon(
        prob.mu.weights(),
        prob.nu.weights(),
        &prob.family,
        &eps_list,
        solver.algo,
        &solver.options(0),
    )?;
    let mut table = Table::new(&["epsilon", "dual_value", "primal_value", "relative_error", "iterations", "wall_time_s"]);
    for row in &res.rows {
        if let Some(err) = &row.error {
            eprintln!("warning: epsilon {}: {}", num(row.epsilon), text(err));
        } else if !row.converged {
            eprintln!("warning: epsilon {} did not converge in {} iterations", num(row.epsilon), row.iterations);
        }
        if common.verbose {
            eprintln!("eps {:.4e}  RE {:.4e}  {} iterations", row.epsilon, row.relative_error, row.iterations);
        }
        table.row(&[
            num(row.epsilon),
            num(row.dual_value),
            num(row.primal_value),
            num(row.relative_error),
            row.iterations.to_string(),
            num(if no_timing { f64::NAN } else { row.wall_time_s }),
        ]);
    }
    let mut out = Outputs::default();
    out.add("sweep.csv", table.into_string());
    if common.plot {
        let chart = Chart {
            title: format!("relative error, exact value {}", num(res.exact_value)),
            x_label: "epsilon".into(),
            y_label: "relative error".into(),
            log_x: true,
            series: vec![Series {
                name: solver.algo.to_string(),
                points: res.rows.iter().map(|r| (r.epsilon, r.relative_error)).collect(),
                style: Style::Line,
            }],
        };
        out.add("sweep.svg", chart.render());
    }
    println!("exact value {}", num(res.exact_value));
    Ok(out)
}

fn parse_bench_config(raw: &str, seed: u64, wind: Option<f64>) -> Result<(ScenarioConfig, f64), Failure> {
    let bad = || Failure::Input(format!("bench config `{raw}` must look like NxMxDAYS:EPS"));
    let (dims, eps) = raw.split_once(':').ok_or_else(bad)?;
    let dims: Vec<usize> = dims.split('x').map(|v| v.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let [n, m, num_days] = dims[..] else {
        return Err(bad());
    };
    let eps = check_epsilon(eps.parse().map_err(|_| bad())?)?;
    let base = ScenarioConfig::default();
    Ok((
        ScenarioConfig {
            n,
            m,
            num_days,
            seed,
            wind_coefficient: wind.unwrap_or(base.wind_coefficient),
            ..base
        },
        eps,
    ))
}

fn bench_cmd(
    common: &Common,
    configs: &[String],
    solver: &SolverArgs,
    trace_every: usize,
    wind: Option<f64>,
) -> Result<Outputs, Failure> {
    let configs = configs
        .iter()
        .map(|c| parse_bench_config(c, common.seed, wind))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = time_accuracy_benchmark(&configs, &solver.options(trace_every.max(1)))?;
    let mut table = Table::new(&[
        "config", "solver", "n", "m", "days", "epsilon", "value", "primal_value", "iterations", "time_s", "oracle",
        "relative_gap", "flag", "error",
    ]);
    let mut traj = Table::new(&["config", "solver", "time_s", "dual_value"]);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in &rows {
        if common.verbose {
            eprintln!("config {} {}: value {} in {:.3}s", r.config, r.solver, num(r.value), r.time_s);
        }
        table.row(&[
            r.config.to_string(),
            r.solver.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.num_days.to_string(),
            num(r.epsilon),
            num(r.value),
            num(r.primal_value),
            r.iterations.to_string(),
            num(r.time_s),
            opt(r.oracle),
            opt(r.relative_gap),
            r.flag.clone().unwrap_or_default(),
            r.error.as_deref().map(text).unwrap_or_default(),
        ]);
        for (t, v) in &r.trajectory {
            traj.row(&[r.config.to_string(), r.solver.to_string(), num(*t), num(*v)]);
        }
    }
    let mut out = Outputs::default();
    out.add("bench.csv", table.into_string());
    out.add("bench_trajectory.csv", traj.into_string());
    if common.plot {
        let series = rows
            .iter()
            .map(|r| Series {
                name: format!("config {} {}", r.config, r.solver),
                points: r.trajectory.clone(),
                style: if r.trajectory.len() > 1 { Style::Line } else { Style::Points },
            })
            .collect();
        let chart = Chart {
            title: "dual value against wall time".into(),
            x_label: "seconds".into(),
            y_label: "value".into(),
            log_x: false,
            series,
        };
        out.add("bench.svg", chart.render());
    }
    Ok(out)
}

fn measure_csv(m: &DiscreteMeasure) -> Result<String, Failure> {
    let mut buf = Vec::new();
    write_measure_csv(m, &mut buf)?;
    Ok(String::from_utf8(buf).expect("measure CSV is ASCII"))
}

fn scenario_cmd(common: &Common, kind: ScenarioKind, n: usize, m: usize, days: usize, wind: Option<f64>) -> Result<Outputs, Failure> {
    let base = ScenarioConfig::default();
    let cfg = ScenarioConfig {
        n,
        m,
        num_days: days,
        seed: common.seed,
        wind_coefficient: wind.unwrap_or(base.wind_coefficient),
        ..base
    };
    let s = match kind {
        ScenarioKind::Sequential => gen_sequential_scenario(&cfg)?,
        ScenarioKind::Dudley => gen_dudley_scenario(&cfg)?,
    };
    let mut out = Outputs::default();
    out.add("mu.csv", measure_csv(&s.mu)?);
    out.add("nu.csv", measure_csv(&s.nu)?);
    for (i, c) in s.family.matrices().iter().enumerate() {
        out.add(format!("cost_{}.csv", i + 1), matrix_csv(c));
    }
    if !s.winds.is_empty() {
        let mut winds = Table::new(&["day", "wx", "wy"]);
        for (i, w) in s.winds.iter().enumerate() {
            winds.row(&[(i + 1).to_string(), num(w[0]), num(w[1])]);
        }
        out.add("winds.csv", winds.into_string());
    }
    if common.plot {
        let cloud = |name: &str, d: &DiscreteMeasure| Series {
            name: name.into(),
            points: d.points().iter().map(|p| (p[0], p[1])).collect(),
            style: Style::Points,
        };
        let chart = Chart {
            title: "scenario supports".into(),
            x_label: "x1".into(),
            y_label: "x2".into(),
            log_x: false,
            series: vec![cloud("mu", &s.mu), cloud("nu", &s.nu)],
        };
        out.add("scenario.svg", chart.render());
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let common = &cli.common;
    let outputs = match &cli.command {
        Command::SolveExact { input } => solve_exact(common, input)?,
        Command::SolveEntropic {
            input,
            solver,
            eps,
            trace_every,
        } => solve_entropic(common, input, solver, *eps, *trace_every)?,
        Command::Dudley { mu, nu, alpha } => dudley_cmd(mu, nu, *alpha)?,
        Command::SweepEps {
            input,
            solver,
            eps,
            eps_rel,
            no_timing,
        } => sweep_cmd(common, input, solver, eps.as_deref(), eps_rel, *no_timing)?,
        Command::Bench {
            configs,
            solver,
            trace_every,
            wind,
        } => bench_cmd(common, configs, solver, *trace_every, *wind)?,
        Command::Scenario { kind, n, m, days, wind } => scenario_cmd(common, *kind, *n, *m, *days, *wind)?,
    };
    for path in outputs.commit(&common.out)? {
        if common.verbose {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
