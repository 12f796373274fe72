//! Problem inputs: measure files or a generated scenario, plus cost specifications.

use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use eot_core::experiments::{gen_dudley_scenario, gen_sequential_scenario, ScenarioConfig};
use eot_core::measures::{
    build_cost_matrix, read_cost_matrix_csv, read_measure, BaseMetric, CostFamily, CostSpec, DiscreteMeasure,
};
use eot_core::EotError;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    /// Gaussian clouds with one wind cost per day.
    Sequential,
    /// Gaussian clouds with the costs `2 * 1[x != y]` and the Euclidean distance.
    Dudley,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Source measure (CSV `x1,...,xd,weight` or JSON).
    #[arg(long, requires = "nu")]
    pub mu: Option<PathBuf>,
    /// Target measure (CSV `x1,...,xd,weight` or JSON).
    #[arg(long, requires = "mu")]
    pub nu: Option<PathBuf>,
    /// Cost specification, one per cost: euclidean, sqeuclidean, l1pow:P, indicator:S,
    /// holder:ALPHA[:l1], wind:WX,WY:BETA or file:PATH. Repeatable.
    #[arg(long = "cost", value_name = "SPEC")]
    pub costs: Vec<String>,
    /// Scenario generated when no measure files are given.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioKind>,
    /// Scenario source size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Scenario target size.
    #[arg(long)]
    pub m: Option<usize>,
    /// Scenario number of days (sequential scenario only).
    #[arg(long)]
    pub days: Option<usize>,
    /// Scenario wind coefficient.
    #[arg(long)]
    pub wind: Option<f64>,
}

/// Defaults used when the corresponding scenario flag is absent.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioDefaults {
    pub kind: ScenarioKind,
    pub n: usize,
    pub m: usize,
    pub days: usize,
}

pub struct Problem {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub family: CostFamily,
}

impl InputArgs {
    pub fn scenario_config(&self, seed: u64, defaults: ScenarioDefaults) -> ScenarioConfig {
        let base = ScenarioConfig::default();
        ScenarioConfig {
            n: self.n.unwrap_or(defaults.n),
            m: self.m.unwrap_or(defaults.m),
            num_days: self.days.unwrap_or(defaults.days),
            seed,
            wind_coefficient: self.wind.unwrap_or(base.wind_coefficient),
            ..base
        }
    }

    pub fn load(&self, seed: u64, defaults: ScenarioDefaults) -> Result<Problem, Failure> {
        let (mu, nu, scenario_family) = match (&self.mu, &self.nu) {
            (Some(mu), Some(nu)) => (load_measure(mu)?, load_measure(nu)?, None),
            _ => {
                let cfg = self.scenario_config(seed, defaults);
                let scenario = match self.scenario.unwrap_or(defaults.kind) {
                    ScenarioKind::Sequential => gen_sequential_scenario(&cfg)?,
                    ScenarioKind::Dudley => gen_dudley_scenario(&cfg)?,
                };
                (scenario.mu, scenario.nu, Some(scenario.family))
            }
        };
        let family = match (scenario_family, self.costs.is_empty()) {
            (Some(family), true) => family,
            (None, true) => return Err(Failure::Input("at least one --cost is required with measure files".into())),
            (_, false) => {
                let matrices = self
                    .costs
                    .iter()
                    .map(|s| build_cost_matrix(&parse_cost_spec(s)?, mu.points(), nu.points()).map_err(Failure::from))
                    .collect::<Result<Vec<_>, _>>()?;
                CostFamily::new(matrices)?
            }
        };
        Ok(Problem { mu, nu, family })
    }
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure, Failure> {
    read_measure(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn number(field: &str, spec: &str) -> Result<f64, Failure> {
    field
        .parse()
        .map_err(|_| Failure::Input(format!("cost spec `{spec}`: `{field}` is not a number")))
}

pub fn parse_cost_spec(spec: &str) -> Result<CostSpec, Failure> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let bad = || Failure::Input(format!("malformed cost spec `{spec}`"));
    let parsed = match (kind, rest) {
        ("euclidean", "") => CostSpec::Euclidean,
        ("sqeuclidean", "") => CostSpec::SquaredEuclidean,
        ("l1pow", p) if !p.is_empty() => CostSpec::L1Power { p: number(p, spec)? },
        ("indicator", s) if !s.is_empty() => CostSpec::ScaledIndicator { scale: number(s, spec)? },
        ("holder", args) if !args.is_empty() => {
            let (alpha, base) = match args.split_once(':') {
                None => (args, BaseMetric::Euclidean),
                Some((alpha, "l1")) => (alpha, BaseMetric::L1),
                Some((alpha, "euclidean")) => (alpha, BaseMetric::Euclidean),
                Some(_) => return Err(bad()),
            };
            CostSpec::HolderPower {
                alpha: number(alpha, spec)?,
                base,
            }
        }
        ("wind", args) => {
            let (dir, beta) = args.split_once(':').ok_or_else(bad)?;
            let direction = dir.split(',').map(|v| number(v, spec)).collect::<Result<Vec<_>, _>>()?;
            CostSpec::Wind {
                direction,
                coefficient: number(beta, spec)?,
            }
        }
        ("file", path) if !path.is_empty() => {
            let file = File::open(path).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
            let matrix = read_cost_matrix_csv(file).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
            CostSpec::Explicit(matrix)
        }
        _ => return Err(bad()),
    };
    parsed.validate().map_err(|e| Failure::Input(format!("cost spec `{spec}`: {e}")))?;
    Ok(parsed)
}

/// Parses a comma-separated list of positive numbers.
pub fn parse_list(raw: &str, what: &str) -> Result<Vec<f64>, Failure> {
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x > 0.0)
                .ok_or_else(|| Failure::Input(format!("{what}: `{v}` is not a positive number")))
        })
        .collect()
}

/// Rejects an epsilon that is not a positive finite number.
pub fn check_epsilon(eps: f64) -> Result<f64, Failure> {
    if eps > 0.0 && eps.is_finite() {
        Ok(eps)
    } else {
        Err(Failure::Input(format!("epsilon must be positive, got {eps}")))
    }
}

impl From<EotError> for Failure {
    fn from(e: EotError) -> Self {
        match e {
            EotError::NumericalFailure { .. } | EotError::DegeneratePlan { .. } => Failure::Numerical(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}
