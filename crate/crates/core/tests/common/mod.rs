//! Instance generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use eot_core::entropic::{DualState, RegularizedProblem};
use eot_core::measures::CostFamily;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive probability vector.
pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

pub fn cost(rng: &mut ChaCha8Rng, n: usize, m: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| rng.gen_range(lo..hi))
}

pub struct Instance {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub family: CostFamily,
}

/// Random marginals of sizes in `[2, max_size]` and `N` in `[1, max_costs]` costs in `[0, 1)`.
pub fn instance(seed: u64, max_size: usize, max_costs: usize) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(2..=max_size);
    let m = r.gen_range(2..=max_size);
    let num = r.gen_range(1..=max_costs);
    sized_instance(&mut r, n, m, num)
}

pub fn sized_instance(r: &mut ChaCha8Rng, n: usize, m: usize, num: usize) -> Instance {
    let a = weights(r, n);
    let b = weights(r, m);
    let costs = (0..num).map(|_| cost(r, n, m, 0.0, 1.0)).collect();
    Instance {
        a,
        b,
        family: CostFamily::new(costs).unwrap(),
    }
}

/// Points on a line and their distance matrix.
pub fn line_support(r: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut xs: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..5.0)).collect();
    xs.sort_by(f64::total_cmp);
    for i in 1..n {
        if xs[i] - xs[i - 1] < 1e-3 {
            xs[i] = xs[i - 1] + 1e-3;
        }
    }
    Array2::from_shape_fn((n, n), |(i, j)| (xs[i] - xs[j]).abs())
}

/// Euclidean distances between random points in the plane.
pub fn planar_support(r: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [r.gen_range(0.0..3.0), r.gen_range(0.0..3.0)]).collect();
    Array2::from_shape_fn((n, n), |(i, j)| {
        ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt()
    })
}

/// Exact minimiser of `|x - v|` over the simplex by enumerating every support set.
pub fn projection_oracle(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let shift = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; n];
        let mut feasible = true;
        for &i in &support {
            x[i] = v[i] - shift;
            if x[i] < -1e-14 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let dist: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().map_or(true, |(d, _)| dist < *d) {
            best = Some((dist, x));
        }
    }
    best.unwrap().1
}

/// `F` evaluated literally, without any max-subtraction.
pub fn naive_objective(state: &DualState, prob: &RegularizedProblem) -> f64 {
    let eps = prob.epsilon;
    let mut total = 0.0;
    for (c, lam) in prob.family.matrices().iter().zip(&state.lambda) {
        for ((k, l), cost) in c.indexed_iter() {
            total += ((state.f[k] + state.g[l] - lam * cost) / eps).exp();
        }
    }
    let fa: f64 = state.f.iter().zip(&prob.a).map(|(x, y)| x * y).sum();
    let gb: f64 = state.g.iter().zip(&prob.b).map(|(x, y)| x * y).sum();
    fa + gb - eps * (total.ln() + 1.0)
}

/// `min_{P1 + P2 = S} max(<P1, C1>, <P2, C2>)` for a fixed nonnegative `S`.
///
/// By minimax over the weight `t` on the first cost this is the maximum over `t` in
/// `[0, 1]` of `sum_j S_j min(t C1_j, (1 - t) C2_j)`, a concave piecewise-linear function
/// whose maximum sits at an endpoint or a kink `C2_j / (C1_j + C2_j)`.
fn split_value(s: &[f64], c1: &[f64], c2: &[f64]) -> f64 {
    let mut candidates = vec![0.0, 1.0];
    for (x, y) in c1.iter().zip(c2) {
        if x + y > 0.0 {
            candidates.push(y / (x + y));
        }
    }
    candidates
        .iter()
        .map(|&t| {
            s.iter()
                .zip(c1.iter().zip(c2))
                .map(|(sj, (x, y))| sj * (t * x).min((1.0 - t) * y))
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// EOT for `n = m = 2`, `N = 2` by scanning the single free entry `S_11` of the summed
/// coupling on a grid of step `step`, with the split between the two costs solved exactly.
pub fn brute_force_eot_2x2(a: &[f64], b: &[f64], c1: &Array2<f64>, c2: &Array2<f64>, step: f64) -> f64 {
    let lo = (a[0] - b[1]).max(0.0);
    let hi = a[0].min(b[0]);
    let c1: Vec<f64> = c1.iter().copied().collect();
    let c2: Vec<f64> = c2.iter().copied().collect();
    let steps = ((hi - lo) / step).ceil() as usize;
    (0..=steps)
        .map(|i| {
            let s11 = (lo + i as f64 * step).min(hi);
            let s = [s11, a[0] - s11, b[0] - s11, a[1] - b[0] + s11];
            split_value(&s, &c1, &c2)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `|x - y|_2` over the stacked `(lambda, f, g)` coordinates.
pub fn state_distance(x: &DualState, y: &DualState) -> f64 {
    x.lambda
        .iter()
        .chain(&x.f)
        .chain(&x.g)
        .zip(y.lambda.iter().chain(&y.f).chain(&y.g))
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

pub fn random_state(r: &mut ChaCha8Rng, num: usize, n: usize, m: usize, scale: f64) -> DualState {
    DualState {
        lambda: weights(r, num),
        f: (0..n).map(|_| r.gen_range(-scale..scale)).collect(),
        g: (0..m).map(|_| r.gen_range(-scale..scale)).collect(),
    }
}
