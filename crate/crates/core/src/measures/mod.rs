//! Discrete measures, cost matrices and coupling families.

mod io;

pub use io::{
    read_cost_matrix_csv, read_measure, read_measure_csv, read_measure_json, write_cost_matrix_csv,
    write_measure_csv,
};

use ndarray::{Array1, Array2, Axis};

use crate::error::{EotError, Result};

/// Tolerance on `sum(weights) == 1` after normalisation.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Rescale nonnegative raw weights onto the strict probability simplex.
pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(EotError::InvalidWeight { index, value });
        }
    }
    let total: f64 = raw.iter().sum();
    if raw.is_empty() || total <= 0.0 {
        return Err(EotError::DegenerateMeasure);
    }
    if let Some(index) = raw.iter().position(|&w| w == 0.0) {
        return Err(EotError::NotStrictlyPositive { index });
    }
    let mut out: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // One more pass pulls the sum to within a couple of ulps of one.
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|w| *w /= total);
    Ok(out)
}

/// A weighted point cloud `sum_k w_k delta_{x_k}` with strictly positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from raw (unnormalised) weights.
    pub fn new(points: Vec<Vec<f64>>, raw_weights: &[f64]) -> Result<Self> {
        if points.len() != raw_weights.len() {
            return Err(EotError::DimensionError(format!(
                "{} points but {} weights",
                points.len(),
                raw_weights.len()
            )));
        }
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(EotError::DimensionError(
                "points must have dimension >= 1".into(),
            ));
        }
        if let Some(bad) = points.iter().position(|p| p.len() != dim) {
            return Err(EotError::DimensionError(format!(
                "point {bad} has dimension {} instead of {dim}",
                points[bad].len()
            )));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(EotError::InvalidParameter(
                "point coordinates must be finite".into(),
            ));
        }
        let weights = normalize_weights(raw_weights)?;
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let raw = vec![1.0; points.len()];
        Self::new(points, &raw)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

/// Metric used underneath a Hölder power cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseMetric {
    Euclidean,
    L1,
}

impl BaseMetric {
    fn eval(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            BaseMetric::Euclidean => euclidean(x, y),
            BaseMetric::L1 => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
        }
    }
}

/// Ground cost between support points.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    /// `|x - y|_2`
    Euclidean,
    /// `|x - y|_2^2`
    SquaredEuclidean,
    /// `|x - y|_1^p`, `p > 0`
    L1Power { p: f64 },
    /// `s * 1[x != y]` with exact coordinate comparison, `s > 0`
    ScaledIndicator { scale: f64 },
    /// `d(x, y)^alpha`, `alpha` in `(0, 1]`
    HolderPower { alpha: f64, base: BaseMetric },
    /// `|y - x| - coefficient * <direction, y - x>`; nonnegative when
    /// `|direction| <= 1` and `0 <= coefficient < 1`.
    Wind { direction: Vec<f64>, coefficient: f64 },
    /// A precomputed `n x m` matrix.
    Explicit(Array2<f64>),
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CostSpec::Euclidean | CostSpec::SquaredEuclidean => Ok(()),
            CostSpec::L1Power { p } => check(*p > 0.0 && p.is_finite(), || {
                format!("l1 power p must be > 0, got {p}")
            }),
            CostSpec::ScaledIndicator { scale } => check(*scale > 0.0 && scale.is_finite(), || {
                format!("indicator scale must be > 0, got {scale}")
            }),
            CostSpec::HolderPower { alpha, .. } => check(*alpha > 0.0 && *alpha <= 1.0, || {
                format!("alpha must lie in (0, 1], got {alpha}")
            }),
            CostSpec::Wind {
                direction,
                coefficient,
            } => {
                let norm = direction.iter().map(|w| w * w).sum::<f64>().sqrt();
                check(norm <= 1.0 + 1e-12, || {
                    format!("wind direction must have norm <= 1, got {norm}")
                })?;
                check((0.0..1.0).contains(coefficient), || {
                    format!("wind coefficient must lie in [0, 1), got {coefficient}")
                })
            }
            CostSpec::Explicit(c) => check(c.iter().all(|v| v.is_finite()), || {
                "explicit cost matrix has non-finite entries".to_string()
            }),
        }
    }

    /// Cost between two points of equal dimension.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            CostSpec::Euclidean => euclidean(x, y),
            CostSpec::SquaredEuclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
            CostSpec::L1Power { p } => BaseMetric::L1.eval(x, y).powf(*p),
            CostSpec::ScaledIndicator { scale } => {
                if x == y {
                    0.0
                } else {
                    *scale
                }
            }
            CostSpec::HolderPower { alpha, base } => base.eval(x, y).powf(*alpha),
            CostSpec::Wind {
                direction,
                coefficient,
            } => {
                let drift: f64 = direction
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(w, (a, b))| w * (b - a))
                    .sum();
                // Cauchy-Schwarz keeps this >= 0 mathematically; clamp rounding.
                (euclidean(x, y) - coefficient * drift).max(0.0)
            }
            CostSpec::Explicit(_) => unreachable!("explicit costs are not evaluated pointwise"),
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(EotError::InvalidParameter(msg()))
    }
}

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Evaluates `spec` on every pair `(x_k, y_l)`.
pub fn build_cost_matrix(spec: &CostSpec, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Array2<f64>> {
    spec.validate()?;
    if xs.is_empty() || ys.is_empty() {
        return Err(EotError::DimensionError("empty point set".into()));
    }
    if let CostSpec::Explicit(c) = spec {
        if c.dim() != (xs.len(), ys.len()) {
            return Err(EotError::DimensionError(format!(
                "explicit matrix is {:?}, expected ({}, {})",
                c.dim(),
                xs.len(),
                ys.len()
            )));
        }
        return Ok(c.clone());
    }
    let d = xs[0].len();
    if xs.iter().chain(ys).any(|p| p.len() != d) {
        return Err(EotError::DimensionError(
            "all points must share one dimension".into(),
        ));
    }
    if let CostSpec::Wind { direction, .. } = spec {
        if direction.len() != d {
            return Err(EotError::DimensionError(format!(
                "wind direction has dimension {}, points have {d}",
                direction.len()
            )));
        }
    }
    Ok(Array2::from_shape_fn((xs.len(), ys.len()), |(k, l)| {
        spec.eval(&xs[k], &ys[l])
    }))
}

/// `scale * 1[k != l]` on a common support of size `n` (points compared by index).
pub fn indicator_matrix(n: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(k, l)| if k == l { 0.0 } else { scale })
}

/// Which sign the costs of a family must have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    /// All entries nonnegative: transport costs.
    Transport,
    /// All entries strictly negative: utilities in a fair-division problem.
    FairDivision,
}

/// `N` cost matrices of a common shape `n x m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFamily {
    matrices: Vec<Array2<f64>>,
    mode: SignMode,
}

impl CostFamily {
    /// A transport family: every entry must be finite and nonnegative.
    pub fn new(matrices: Vec<Array2<f64>>) -> Result<Self> {
        Self::with_mode(matrices, SignMode::Transport)
    }

    /// A fair-division family: every entry must be strictly negative.
    pub fn fair_division(matrices: Vec<Array2<f64>>) -> Result<Self> {
        Self::with_mode(matrices, SignMode::FairDivision)
    }

    pub fn with_mode(matrices: Vec<Array2<f64>>, mode: SignMode) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| EotError::InvalidCost("a cost family needs at least one matrix".into()))?;
        let shape = first.dim();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(EotError::InvalidCost("cost matrices must be non-empty".into()));
        }
        for (i, c) in matrices.iter().enumerate() {
            if c.dim() != shape {
                return Err(EotError::DimensionError(format!(
                    "cost {i} has shape {:?}, expected {shape:?}",
                    c.dim()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(EotError::InvalidCost(format!("cost {i} has non-finite entries")));
            }
            let ok = match mode {
                SignMode::Transport => c.iter().all(|&v| v >= 0.0),
                SignMode::FairDivision => c.iter().all(|&v| v < 0.0),
            };
            if !ok {
                return Err(EotError::InvalidCost(match mode {
                    SignMode::Transport => format!("cost {i} has negative entries"),
                    SignMode::FairDivision => format!("cost {i} has nonnegative entries"),
                }));
            }
        }
        // Standard layout lets the solvers walk matrices as flat slices.
        let matrices = matrices
            .into_iter()
            .map(|c| if c.is_standard_layout() { c } else { c.as_standard_layout().to_owned() })
            .collect();
        Ok(Self { matrices, mode })
    }

    pub fn matrices(&self) -> &[Array2<f64>] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &Array2<f64> {
        &self.matrices[i]
    }

    pub fn mode(&self) -> SignMode {
        self.mode
    }

    /// Number of costs `N`.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrices[0].ncols()
    }

    /// `max_i max_{k,l} |C_i[k,l]|`
    pub fn sup_norm(&self) -> f64 {
        self.matrices
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub(crate) fn check_marginals(&self, a: &[f64], b: &[f64]) -> Result<()> {
        if a.len() != self.rows() || b.len() != self.cols() {
            return Err(EotError::DimensionError(format!(
                "marginals have lengths ({}, {}) but costs are {}x{}",
                a.len(),
                b.len(),
                self.rows(),
                self.cols()
            )));
        }
        Ok(())
    }
}

/// Entrywise `min_i lambda_i C_i`.
pub fn pointwise_min_cost(family: &CostFamily, lambda: &[f64]) -> Result<Array2<f64>> {
    if lambda.len() != family.len() {
        return Err(EotError::DimensionError(format!(
            "lambda has length {}, family has {} costs",
            lambda.len(),
            family.len()
        )));
    }
    let mut out = &family.matrices[0] * lambda[0];
    for (c, &w) in family.matrices.iter().zip(lambda).skip(1) {
        out.zip_mut_with(c, |o, &v| *o = o.min(w * v));
    }
    Ok(out)
}

/// Pads a `k`-cost family to `target` costs: the first `k - 1` matrices are kept and the
/// last one is scaled by `target - k + 1` and repeated `target - k + 1` times.
pub fn pad_cost_family(family: &CostFamily, target: usize) -> Result<CostFamily> {
    let k = family.len();
    if k > target {
        return Err(EotError::InvalidParameter(format!(
            "cannot pad {k} costs down to {target}"
        )));
    }
    let reps = target - k + 1;
    let last = &family.matrices[k - 1] * reps as f64;
    let mut matrices: Vec<_> = family.matrices[..k - 1].to_vec();
    matrices.extend(std::iter::repeat(last).take(reps));
    CostFamily::with_mode(matrices, family.mode)
}

/// `N` nonnegative plans whose sum is meant to couple two measures.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingFamily {
    plans: Vec<Array2<f64>>,
}

impl CouplingFamily {
    pub fn new(plans: Vec<Array2<f64>>) -> Result<Self> {
        let shape = plans
            .first()
            .map(Array2::dim)
            .ok_or_else(|| EotError::DimensionError("empty coupling family".into()))?;
        if plans.iter().any(|p| p.dim() != shape) {
            return Err(EotError::DimensionError(
                "plans must share one shape".into(),
            ));
        }
        Ok(Self { plans })
    }

    pub fn plans(&self) -> &[Array2<f64>] {
        &self.plans
    }

    pub fn into_plans(self) -> Vec<Array2<f64>> {
        self.plans
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// `sum_i P_i`
    pub fn total(&self) -> Array2<f64> {
        let mut s = self.plans[0].clone();
        for p in &self.plans[1..] {
            s += p;
        }
        s
    }

    pub fn row_marginal(&self) -> Array1<f64> {
        self.total().sum_axis(Axis(1))
    }

    pub fn col_marginal(&self) -> Array1<f64> {
        self.total().sum_axis(Axis(0))
    }

    pub fn total_mass(&self) -> f64 {
        self.plans.iter().map(|p| p.sum()).sum()
    }

    /// L1 distance of the two marginals of `sum_i P_i` to `(a, b)`.
    pub fn marginal_residual(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.row_marginal();
        let c = self.col_marginal();
        let dr: f64 = r.iter().zip(a).map(|(x, y)| (x - y).abs()).sum();
        let dc: f64 = c.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        dr + dc
    }

    /// `<P_i, C_i>` for every `i`.
    pub fn per_cost_values(&self, family: &CostFamily) -> Vec<f64> {
        self.plans
            .iter()
            .zip(family.matrices())
            .map(|(p, c)| (p * c).sum())
            .collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.plans
            .iter()
            .flat_map(|p| p.iter())
            .fold(f64::INFINITY, |acc, &v| acc.min(v))
    }
}
