//! Dense two-phase primal simplex.
//!
//! The program is rewritten in standard form `min c'z, A z = b, z >= 0`
//! (bounds shifted or split, slacks added, rows flipped so `b >= 0`), an
//! artificial column is attached to every row, and the full tableau is pivoted
//! with Dantzig pricing. Rows whose slack enters with +1 start from the slack.
//! After a run of degenerate pivots pricing falls back to Bland's rule until
//! progress resumes. The leaving row comes from a Harris ratio test with a pivot
//! tolerance relative to the column scale. The basis is periodically reinverted
//! from the original data with an LU factorisation, replacing numerically
//! dependent basic columns by unit columns first, and the reported primal and
//! dual vectors come from a final reinversion rather than the drifting tableau.

use nalgebra::{DMatrix, DVector};

use crate::error::{EotError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse row as `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `opt c'x` subject to sparse linear rows and per-variable bounds.
///
/// Variables default to `[0, +inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    /// Marks a variable as free, `(-inf, +inf)`.
    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Appends a row and returns its index (the index into [`ExactSolution::duals`]).
    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(EotError::InvalidParameter("bound vectors do not match objective".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(EotError::InvalidParameter("objective has non-finite entries".into()));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(EotError::InvalidParameter(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
        }
        for (r, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(EotError::InvalidParameter(format!("row {r} has non-finite rhs")));
            }
            if let Some(&(j, v)) = row.coeffs.iter().find(|(j, v)| *j >= n || !v.is_finite()) {
                return Err(EotError::InvalidParameter(format!(
                    "row {r} references variable {j} with coefficient {v}"
                )));
            }
        }
        Ok(())
    }

    /// Value of row `r` at `x`.
    pub fn row_activity(&self, r: usize, x: &[f64]) -> f64 {
        self.constraints[r].coeffs.iter().map(|&(j, v)| v * x[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`lp_solve`].
///
/// `duals[r]` is the shadow price of row `r`: the derivative of the optimal
/// value with respect to that row's right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub pivots: usize,
}

/// Optimality diagnostics of a candidate primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// Largest violation of a row or a bound.
    pub primal: f64,
    /// Largest violation of a dual sign condition (row multipliers and reduced costs).
    pub dual: f64,
    /// Largest `|multiplier * slack|` over rows and bounds.
    pub complementarity: f64,
}

impl ExactSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn kkt_residuals(&self, lp: &LinearProgram) -> KktResiduals {
        let x = &self.primal;
        // Work in minimisation form: sign = +1 for min, -1 for max.
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut primal = 0.0_f64;
        let mut dual = 0.0_f64;
        let mut comp = 0.0_f64;
        let mut reduced: Vec<f64> = lp.objective.iter().map(|c| sign * c).collect();
        for (r, row) in lp.constraints.iter().enumerate() {
            let act = lp.row_activity(r, x);
            let slack = act - row.rhs;
            let y = sign * self.duals[r];
            match row.relation {
                Relation::Le => {
                    primal = primal.max(slack);
                    dual = dual.max(y);
                }
                Relation::Ge => {
                    primal = primal.max(-slack);
                    dual = dual.max(-y);
                }
                Relation::Eq => primal = primal.max(slack.abs()),
            }
            if row.relation != Relation::Eq {
                comp = comp.max((y * slack).abs());
            }
            for &(j, v) in &row.coeffs {
                reduced[j] -= y * v;
            }
        }
        for (j, &rc) in reduced.iter().enumerate() {
            let (lo, hi) = (lp.lower[j], lp.upper[j]);
            primal = primal.max(lo - x[j]).max(x[j] - hi);
            let dist_lo = x[j] - lo;
            let dist_hi = hi - x[j];
            // rc >= 0 is fine at the lower bound, rc <= 0 at the upper bound.
            let viol = if lo.is_finite() && hi.is_finite() {
                if dist_lo <= dist_hi {
                    (-rc).max(0.0)
                } else {
                    rc.max(0.0)
                }
            } else if lo.is_finite() {
                (-rc).max(0.0)
            } else if hi.is_finite() {
                rc.max(0.0)
            } else {
                rc.abs()
            };
            dual = dual.max(viol);
            let gap = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => dist_lo.abs().min(dist_hi.abs()),
                (true, false) => dist_lo.abs(),
                (false, true) => dist_hi.abs(),
                (false, false) => 1.0,
            };
            comp = comp.max(rc.abs() * gap);
        }
        KktResiduals {
            primal,
            dual,
            complementarity: comp,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + z`
    Shift { col: usize, lo: f64 },
    /// `x = hi - z`
    Mirror { col: usize, hi: f64 },
    /// `x = z_pos - z_neg`
    Split { pos: usize, neg: usize },
}

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;
const REPAIR_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_STREAK: usize = 50;
const REINVERT_EVERY: usize = 200;

struct StandardForm {
    rows: usize,
    /// Structural + slack columns (artificials excluded).
    cols: usize,
    /// Dense row-major `rows x cols`.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// +1 / -1 per original or bound row, recording whether it was negated.
    flip: Vec<f64>,
    var_map: Vec<VarMap>,
    /// The opposite half of a split free variable, if any.
    twin: Vec<Option<usize>>,
    /// Slack column of each row, if the row has one.
    slack: Vec<Option<usize>>,
}

fn standard_form(lp: &LinearProgram) -> StandardForm {
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut var_map = Vec::with_capacity(lp.num_vars());
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let map = if lo.is_finite() {
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            VarMap::Shift { col: ncols, lo }
        } else if hi.is_finite() {
            VarMap::Mirror { col: ncols, hi }
        } else {
            ncols += 1;
            VarMap::Split {
                pos: ncols - 1,
                neg: ncols,
            }
        };
        ncols += 1;
        var_map.push(map);
    }
    let structural = ncols;
    let m = lp.constraints.len() + bound_rows.len();
    let slack_rows: Vec<usize> = lp
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.relation != Relation::Eq)
        .map(|(r, _)| r)
        .chain(lp.constraints.len()..m)
        .collect();
    let cols = structural + slack_rows.len();
    let mut a = vec![0.0; m * cols];
    let mut b = vec![0.0; m];
    let mut c = vec![0.0; cols];
    for (j, map) in var_map.iter().enumerate() {
        let cj = sign * lp.objective[j];
        match *map {
            VarMap::Shift { col, .. } => c[col] = cj,
            VarMap::Mirror { col, .. } => c[col] = -cj,
            VarMap::Split { pos, neg } => {
                c[pos] = cj;
                c[neg] = -cj;
            }
        }
    }
    for (r, row) in lp.constraints.iter().enumerate() {
        let mut rhs = row.rhs;
        for &(j, v) in &row.coeffs {
            match var_map[j] {
                VarMap::Shift { col, lo } => {
                    a[r * cols + col] += v;
                    rhs -= v * lo;
                }
                VarMap::Mirror { col, hi } => {
                    a[r * cols + col] -= v;
                    rhs -= v * hi;
                }
                VarMap::Split { pos, neg } => {
                    a[r * cols + pos] += v;
                    a[r * cols + neg] -= v;
                }
            }
        }
        b[r] = rhs;
    }
    for (k, &(col, width)) in bound_rows.iter().enumerate() {
        let r = lp.constraints.len() + k;
        a[r * cols + col] = 1.0;
        b[r] = width;
    }
    let mut slack = vec![None; m];
    for (k, &r) in slack_rows.iter().enumerate() {
        slack[r] = Some(structural + k);
        let coef = if r < lp.constraints.len() && lp.constraints[r].relation == Relation::Ge {
            -1.0
        } else {
            1.0
        };
        a[r * cols + structural + k] = coef;
    }
    let mut flip = vec![1.0; m];
    for r in 0..m {
        if b[r] < 0.0 {
            flip[r] = -1.0;
            b[r] = -b[r];
            a[r * cols..(r + 1) * cols].iter_mut().for_each(|v| *v = -*v);
        }
    }
    let mut twin = vec![None; cols];
    for map in &var_map {
        if let VarMap::Split { pos, neg } = *map {
            twin[pos] = Some(neg);
            twin[neg] = Some(pos);
        }
    }
    StandardForm {
        rows: m,
        cols,
        a,
        b,
        c,
        flip,
        var_map,
        twin,
        slack,
    }
}

/// Full tableau over `[structural | slack | artificial]` columns.
struct Tableau<'a> {
    sf: &'a StandardForm,
    width: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Phase costs over all `width` columns.
    costs: Vec<f64>,
    pivots: usize,
    since_reinvert: usize,
}

enum Ratio {
    Pivot { row: usize, ratio: f64 },
    Unbounded,
    /// Only roundoff-sized pivots are available in the entering column.
    Unstable,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(sf: &'a StandardForm) -> Self {
        let m = sf.rows;
        let width = sf.cols + m;
        let mut t = vec![0.0; m * width];
        for r in 0..m {
            t[r * width..r * width + sf.cols].copy_from_slice(&sf.a[r * sf.cols..(r + 1) * sf.cols]);
            t[r * width + sf.cols + r] = 1.0;
        }
        let mut costs = vec![0.0; width];
        costs[sf.cols..].iter_mut().for_each(|c| *c = 1.0);
        let mut tab = Self {
            sf,
            width,
            t,
            rhs: sf.b.clone(),
            reduced: vec![0.0; width],
            basis: (sf.cols..width).collect(),
            in_basis: (0..width).map(|j| j >= sf.cols).collect(),
            costs,
            pivots: 0,
            since_reinvert: 0,
        };
        // Rows whose slack enters with +1 start from the slack: B stays the identity.
        for r in 0..m {
            if let Some(j) = sf.slack[r] {
                if sf.a[r * sf.cols + j] == 1.0 {
                    tab.in_basis[tab.basis[r]] = false;
                    tab.in_basis[j] = true;
                    tab.basis[r] = j;
                }
            }
        }
        tab.price();
        tab
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.sf.cols
    }

    /// Both halves of a split variable in the basis would make it singular.
    fn may_enter(&self, j: usize) -> bool {
        !self.in_basis[j] && self.sf.twin.get(j).copied().flatten().map_or(true, |t| !self.in_basis[t])
    }

    fn price(&mut self) {
        let m = self.sf.rows;
        let w = self.width;
        self.reduced.copy_from_slice(&self.costs);
        for r in 0..m {
            let cb = self.costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * w..(r + 1) * w];
                self.reduced.iter_mut().zip(row).for_each(|(d, v)| *d -= cb * v);
            }
        }
    }

    fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&j, x)| self.costs[j] * x)
            .sum()
    }

    /// Column `j` of `[A | I]` in the flipped standard form.
    fn original_column(&self, j: usize, out: &mut [f64]) {
        let sf = self.sf;
        if j < sf.cols {
            for (r, o) in out.iter_mut().enumerate() {
                *o = sf.a[r * sf.cols + j];
            }
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[j - sf.cols] = 1.0;
        }
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let m = self.sf.rows;
        let mut bm = DMatrix::zeros(m, m);
        let mut col = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            self.original_column(j, &mut col);
            for r in 0..m {
                bm[(r, k)] = col[r];
            }
        }
        bm
    }

    /// Swaps numerically dependent basic columns for unit columns.
    ///
    /// Gaussian elimination with row pivoting runs over the basic columns in order;
    /// a column whose best remaining pivot is negligible depends on the earlier ones
    /// and is replaced by the slack, or failing that the artificial, of a row that
    /// no kept column claimed.
    fn repair_basis(&mut self) -> Result<()> {
        let m = self.sf.rows;
        let mut bm = self.basis_matrix();
        let mut used = vec![false; m];
        let mut dropped = Vec::new();
        for k in 0..m {
            let norm = bm.column(k).amax().max(1.0);
            let pick = (0..m)
                .filter(|&r| !used[r])
                .map(|r| (r, bm[(r, k)].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1));
            match pick {
                Some((r, v)) if v > REPAIR_TOL * norm => {
                    used[r] = true;
                    let p = bm[(r, k)];
                    for c in k + 1..m {
                        let f = bm[(r, c)] / p;
                        if f != 0.0 {
                            for i in 0..m {
                                if !used[i] {
                                    let d = bm[(i, k)];
                                    bm[(i, c)] -= f * d;
                                }
                            }
                        }
                    }
                }
                _ => dropped.push(k),
            }
        }
        if dropped.is_empty() {
            return Ok(());
        }
        let free_rows: Vec<usize> = (0..m).filter(|&r| !used[r]).collect();
        for (&k, &r) in dropped.iter().zip(&free_rows) {
            let unit = match self.sf.slack[r] {
                Some(j) if !self.in_basis[j] => j,
                _ => self.sf.cols + r,
            };
            self.in_basis[self.basis[k]] = false;
            self.in_basis[unit] = true;
            self.basis[k] = unit;
        }
        Ok(())
    }

    /// Rebuilds the tableau as `B^{-1} [A | I]` from the original data.
    fn reinvert(&mut self) -> Result<()> {
        let m = self.sf.rows;
        if m == 0 {
            self.price();
            self.since_reinvert = 0;
            return Ok(());
        }
        self.repair_basis()?;
        let lu = self.basis_matrix().lu();
        let w = self.width;
        let mut col = vec![0.0; m];
        for j in 0..w {
            self.original_column(j, &mut col);
            let sol = lu
                .solve(&DVector::from_column_slice(&col))
                .ok_or_else(|| EotError::numerical(self.pivots, "singular basis during reinversion"))?;
            for r in 0..m {
                self.t[r * w + j] = sol[r];
            }
        }
        let sol = lu
            .solve(&DVector::from_column_slice(&self.sf.b))
            .ok_or_else(|| EotError::numerical(self.pivots, "singular basis during reinversion"))?;
        self.rhs.copy_from_slice(sol.as_slice());
        let scale = 1.0 + self.sf.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        for (r, &j) in self.basis.iter().enumerate() {
            let x = self.rhs[r];
            // artificials carry zero cost only in phase 2, where they must stay at zero
            let stray = self.is_artificial(j) && self.costs[j] == 0.0 && x > FEAS_TOL * scale;
            if x < -FEAS_TOL * scale || stray {
                return Err(EotError::numerical(self.pivots, "basis repair lost primal feasibility"));
            }
            if x < 0.0 {
                self.rhs[r] = 0.0;
            }
        }
        // Basic columns are exact unit vectors by construction.
        for (r, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.t[i * w + j] = if i == r { 1.0 } else { 0.0 };
            }
        }
        self.price();
        self.since_reinvert = 0;
        Ok(())
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.sf.rows;
        let w = self.width;
        let p = self.t[row * w + col];
        {
            let pr = &mut self.t[row * w..(row + 1) * w];
            pr.iter_mut().for_each(|v| *v /= p);
        }
        self.rhs[row] /= p;
        let pivot_row: Vec<f64> = self.t[row * w..(row + 1) * w].to_vec();
        let pivot_rhs = self.rhs[row];
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = self.t[i * w + col];
            if f != 0.0 {
                let ri = &mut self.t[i * w..(i + 1) * w];
                ri.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                ri[col] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-12 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.reduced[col];
        if f != 0.0 {
            self.reduced.iter_mut().zip(&pivot_row).for_each(|(d, pv)| *d -= f * pv);
            self.reduced[col] = 0.0;
        }
        self.in_basis[self.basis[row]] = false;
        self.in_basis[col] = true;
        self.basis[row] = col;
        self.pivots += 1;
        self.since_reinvert += 1;
    }

    /// Harris two-pass ratio test: the first pass bounds the step with the rhs
    /// relaxed by `HARRIS_TOL`, the second takes the largest pivot within that bound.
    /// Under Bland's rule ties go to the smallest basic index instead. Entries below
    /// `PIVOT_TOL` relative to the column scale count as zero.
    fn ratio_test(&self, col: usize, bland: bool) -> Ratio {
        let m = self.sf.rows;
        let w = self.width;
        let column = || (0..m).map(move |r| self.t[r * w + col]);
        let scale = column().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let tol = PIVOT_TOL * scale;
        let mut bound = f64::INFINITY;
        for (r, v) in column().enumerate() {
            if v > tol {
                bound = bound.min((self.rhs[r].max(0.0) + HARRIS_TOL) / v);
            }
        }
        if bound.is_infinite() {
            return if column().any(|v| v > PIVOT_TOL) {
                Ratio::Unstable
            } else {
                Ratio::Unbounded
            };
        }
        let mut pick: Option<(usize, f64, f64)> = None;
        for (r, v) in column().enumerate() {
            if v <= tol {
                continue;
            }
            let ratio = self.rhs[r].max(0.0) / v;
            if ratio > bound {
                continue;
            }
            let better = match pick {
                None => true,
                Some((cur, _, _)) if bland => self.basis[r] < self.basis[cur],
                Some((_, cv, _)) => v > cv,
            };
            if better {
                pick = Some((r, v, ratio));
            }
        }
        let (row, _, ratio) = pick.expect("a finite bound implies a candidate row");
        Ratio::Pivot { row, ratio }
    }

    fn run(&mut self, allow_artificial: bool, max_pivots: usize) -> Result<PhaseOutcome> {
        let w = self.width;
        let mut degenerate_run = 0usize;
        let mut verified = false;
        let mut rejected: Vec<usize> = Vec::new();
        loop {
            if self.pivots >= max_pivots {
                return Err(EotError::numerical(self.pivots, "simplex pivot limit exceeded (cycling?)"));
            }
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert()?;
            }
            let limit = if allow_artificial { w } else { self.sf.cols };
            let bland = degenerate_run >= DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = -OPT_TOL;
            for j in 0..limit {
                let d = self.reduced[j];
                if d < best && self.may_enter(j) && !rejected.contains(&j) {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(col) = entering else {
                if verified {
                    return Ok(PhaseOutcome::Optimal);
                }
                // Confirm optimality on a freshly reinverted tableau.
                self.reinvert()?;
                verified = true;
                continue;
            };
            verified = false;
            let (row, best_ratio) = match self.ratio_test(col, bland) {
                Ratio::Pivot { row, ratio } => (row, ratio),
                Ratio::Unbounded => return Ok(PhaseOutcome::Unbounded),
                Ratio::Unstable if self.since_reinvert > 0 => {
                    self.reinvert()?;
                    continue;
                }
                Ratio::Unstable => {
                    rejected.push(col);
                    continue;
                }
            };
            rejected.clear();
            if best_ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col);
        }
    }
}

/// Solves a dense LP to optimality, or reports infeasibility / unboundedness in the status.
pub fn lp_solve(lp: &LinearProgram) -> Result<ExactSolution> {
    lp.validate()?;
    let sf = standard_form(lp);
    let m = sf.rows;
    let max_pivots = 50 * (m + sf.cols) + 10_000;
    let mut tab = Tableau::new(&sf);

    // Phase 1: drive the artificials to zero.
    match tab.run(true, max_pivots)? {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded => return Err(EotError::numerical(tab.pivots, "phase 1 reported unbounded")),
    }
    let scale = 1.0 + sf.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if tab.objective() > 1e-9 * scale {
        return Ok(ExactSolution {
            status: LpStatus::Infeasible,
            value: f64::NAN,
            primal: vec![f64::NAN; lp.num_vars()],
            duals: vec![f64::NAN; lp.constraints.len()],
            pivots: tab.pivots,
        });
    }
    // Pivot basic artificials out where the row allows it; rows with no
    // structural entry are redundant and keep their artificial at zero.
    for r in 0..m {
        if tab.is_artificial(tab.basis[r]) {
            let w = tab.width;
            let best = (0..sf.cols)
                .filter(|&j| tab.may_enter(j))
                .map(|j| (j, tab.t[r * w + j].abs()))
                .filter(|&(_, v)| v > 1e-7)
                .max_by(|x, y| x.1.total_cmp(&y.1));
            if let Some((j, _)) = best {
                tab.pivot(r, j);
            }
        }
    }

    // Phase 2 on the true costs; artificials may no longer enter.
    tab.costs.iter_mut().for_each(|c| *c = 0.0);
    tab.costs[..sf.cols].copy_from_slice(&sf.c);
    tab.reinvert()?;
    if let PhaseOutcome::Unbounded = tab.run(false, max_pivots)? {
        return Ok(ExactSolution {
            status: LpStatus::Unbounded,
            value: match lp.sense {
                Sense::Minimize => f64::NEG_INFINITY,
                Sense::Maximize => f64::INFINITY,
            },
            primal: vec![f64::NAN; lp.num_vars()],
            duals: vec![f64::NAN; lp.constraints.len()],
            pivots: tab.pivots,
        });
    }

    // Final primal/dual from one LU factorisation of the optimal basis.
    let mut z = vec![0.0; sf.cols + m];
    let mut y = vec![0.0; m];
    if m > 0 {
        let bm = tab.basis_matrix();
        let lu = bm.clone().lu();
        let xb = lu
            .solve(&DVector::from_column_slice(&sf.b))
            .ok_or_else(|| EotError::numerical(tab.pivots, "singular optimal basis"))?;
        let cb = DVector::from_iterator(m, tab.basis.iter().map(|&j| tab.costs[j]));
        let yv = bm
            .transpose()
            .lu()
            .solve(&cb)
            .ok_or_else(|| EotError::numerical(tab.pivots, "singular optimal basis"))?;
        for (k, &j) in tab.basis.iter().enumerate() {
            z[j] = xb[k].max(0.0);
        }
        y.copy_from_slice(yv.as_slice());
    }

    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let primal: Vec<f64> = sf
        .var_map
        .iter()
        .map(|map| match *map {
            VarMap::Shift { col, lo } => lo + z[col],
            VarMap::Mirror { col, hi } => hi - z[col],
            VarMap::Split { pos, neg } => z[pos] - z[neg],
        })
        .collect();
    let duals: Vec<f64> = (0..lp.constraints.len())
        .map(|r| sign * sf.flip[r] * y[r])
        .collect();
    let value = lp.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();
    Ok(ExactSolution {
        status: LpStatus::Optimal,
        value,
        primal,
        duals,
        pivots: tab.pivots,
    })
}
