//! One pass/fail line per acceptance criterion. Exits nonzero if any line fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{instance, line_support, planar_support, projection_oracle, random_state, rng, state_distance, weights};
use eot_core::entropic::{
    apga_solve, grad_f, lipschitz_l, objective_f, pam_solve, simplex_project, sinkhorn_baseline, DualState,
    RegularizedProblem, SolveOptions,
};
use eot_core::experiments::{gen_dudley_scenario, gen_sequential_scenario, ScenarioConfig};
use eot_core::lp::{dudley_ipm_exact, eot_exact, ot_exact, utilitarian_exact};
use eot_core::measures::{indicator_matrix, pad_cost_family, CostFamily};
use eot_core::metrics::{harmonic_upper_bound, relative_error};
use ndarray::Array2;
use rand::Rng;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!("{} criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn lp_self_consistency(rep: &mut Report) {
    let start = Instant::now();
    let (mut marg, mut gap, mut spread, mut comp) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for seed in 0..50 {
        let inst = instance(seed, 15, 4);
        let res = eot_exact(&inst.a, &inst.b, &inst.family).unwrap();
        marg = marg.max(res.marginal_residual(&inst.a, &inst.b));
        gap = gap.max(res.duality_gap(&inst.a, &inst.b));
        spread = spread.max(res.equality_spread());
        comp = comp.max(res.certificate_residuals(&inst.family).on_support);
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = marg <= 1e-8 && gap <= 1e-7 && spread <= 1e-7 && comp <= 1e-6 && secs <= 30.0;
    rep.line(
        "1 (LP self-consistency, 50 instances)",
        ok,
        format!("marginal {marg:.1e} <= 1e-8, gap {gap:.1e} <= 1e-7, spread {spread:.1e} <= 1e-7, complementarity {comp:.1e} <= 1e-6, {secs:.1}s <= 30s"),
    );
}

fn bound_chain(rep: &mut Report) {
    let slack = 1e-9;
    let (mut literal_violations, mut worst_literal) = (0, 0.0_f64);
    let (mut upper_ok, mut util_ok) = (true, true);
    for seed in 0..50 {
        let inst = instance(seed, 15, 4);
        let util = utilitarian_exact(&inst.a, &inst.b, &inst.family).unwrap();
        let bounds = harmonic_upper_bound(&inst.a, &inst.b, &inst.family).unwrap();
        let eot = bounds.eot_value;
        if util > eot + slack {
            literal_violations += 1;
            worst_literal = worst_literal.max(util - eot);
        }
        let harmonic_applies = bounds.per_cost_ot.iter().all(|&w| w > 0.0);
        upper_ok &= eot <= bounds.min_ot + slack;
        if harmonic_applies {
            upper_ok &= eot <= bounds.harmonic_bound + slack && bounds.harmonic_bound <= bounds.min_ot + slack;
        }
        util_ok &= eot <= util + slack && util / inst.family.len() as f64 <= eot + slack;
    }
    rep.line(
        "2a (utilitarian <= EOT, as literally stated)",
        literal_violations == 0,
        format!("violated on {literal_violations}/50 instances, worst excess {worst_literal:.3e}"),
    );
    rep.line(
        "2b (EOT <= harmonic bound <= min_i W_i)",
        upper_ok,
        "all 50 instances within 1e-9".into(),
    );
    rep.line(
        "2c (EOT <= utilitarian and utilitarian / N <= EOT)",
        util_ok,
        "all 50 instances within 1e-9".into(),
    );
    let mut worst = 0.0_f64;
    for d in [0.25, 0.5, 1.0, 3.0, 10.0] {
        let fam = CostFamily::new(vec![Array2::from_elem((1, 1), 2.0), Array2::from_elem((1, 1), d)]).unwrap();
        let bounds = harmonic_upper_bound(&[1.0], &[1.0], &fam).unwrap();
        let closed = 2.0 * d / (d + 2.0);
        worst = worst.max((bounds.eot_value - closed).abs()).max((bounds.harmonic_bound - closed).abs());
    }
    rep.line(
        "2d (single cell attains 2d/(d+2))",
        worst <= 1e-12,
        format!("max deviation {worst:.1e} <= 1e-12"),
    );
}

fn dudley_cross(rep: &mut Report) {
    for alpha in [1.0_f64, 0.5] {
        let mut worst = 0.0_f64;
        for seed in 0..20u64 {
            let mut r = rng(seed.wrapping_mul(7919) ^ alpha.to_bits());
            let n = r.gen_range(2..=10);
            let d = if seed % 2 == 0 { line_support(&mut r, n) } else { planar_support(&mut r, n) };
            let a = weights(&mut r, n);
            let b = weights(&mut r, n);
            let fam = CostFamily::new(vec![indicator_matrix(n, 2.0), d.mapv(|v| v.powf(alpha))]).unwrap();
            let eot = eot_exact(&a, &b, &fam).unwrap().value;
            let ipm = dudley_ipm_exact(&a, &b, &d, alpha).unwrap();
            worst = worst.max((eot - ipm).abs());
        }
        rep.line(
            &format!("3 (EOT with (2*1[x!=y], D^{alpha}) equals the IPM, 20 instances)"),
            worst <= 1e-7,
            format!("max difference {worst:.1e} <= 1e-7"),
        );
    }
}

fn reductions(rep: &mut Report) {
    let (mut single, mut scaled, mut padded) = (0.0_f64, 0.0_f64, 0.0_f64);
    for seed in 0..20 {
        let one = instance(seed, 12, 1);
        let c = one.family.matrix(0);
        let ot = ot_exact(&one.a, &one.b, c).unwrap().value;
        single = single.max((eot_exact(&one.a, &one.b, &one.family).unwrap().value - ot).abs());
        let copies = 2 + seed as usize % 3;
        let fam = CostFamily::new(vec![c * copies as f64; copies]).unwrap();
        scaled = scaled.max((eot_exact(&one.a, &one.b, &fam).unwrap().value - ot).abs());
        let many = instance(seed + 1000, 8, 3);
        let base = eot_exact(&many.a, &many.b, &many.family).unwrap().value;
        let pad = pad_cost_family(&many.family, many.family.len() + 2).unwrap();
        padded = padded.max((eot_exact(&many.a, &many.b, &pad).unwrap().value - base).abs());
    }
    rep.line(
        "4 (reductions: N = 1, scaled copies, padding)",
        single <= 1e-12 && scaled <= 1e-9 && padded <= 1e-7,
        format!("N = 1 {single:.1e} <= 1e-12, scaled {scaled:.1e} <= 1e-9, padded {padded:.1e} <= 1e-7"),
    );
}

fn stacked(s: &DualState) -> Vec<f64> {
    s.lambda.iter().chain(&s.f).chain(&s.g).copied().collect()
}

fn nudge(s: &DualState, idx: usize, h: f64) -> DualState {
    let mut v = stacked(s);
    v[idx] += h;
    let (nl, nf) = (s.lambda.len(), s.f.len());
    DualState {
        lambda: v[..nl].to_vec(),
        f: v[nl..nl + nf].to_vec(),
        g: v[nl + nf..].to_vec(),
    }
}

fn entropic_correctness(rep: &mut Report) {
    let start = Instant::now();
    let mut fd_worst = 0.0_f64;
    for seed in 0..20 {
        let mut r = rng(seed ^ 0xacce);
        let inst = instance(seed, 8, 4);
        let prob = RegularizedProblem::new(&inst.a, &inst.b, inst.family, r.gen_range(0.2..2.0)).unwrap();
        let state = random_state(&mut r, prob.num_costs(), prob.a.len(), prob.b.len(), 1.0);
        let grad = grad_f(&state, &prob).unwrap();
        let g = stacked(&DualState {
            lambda: grad.lambda,
            f: grad.f,
            g: grad.g,
        });
        let h = 1e-5;
        for (idx, gi) in g.iter().enumerate() {
            let up = objective_f(&nudge(&state, idx, h), &prob).unwrap();
            let down = objective_f(&nudge(&state, idx, -h), &prob).unwrap();
            fd_worst = fd_worst.max(((up - down) / (2.0 * h) - gi).abs() / gi.abs().max(1e-3));
        }
    }
    let mut ratio_worst = 0.0_f64;
    for seed in 0..100 {
        let mut r = rng(seed ^ 0x1195);
        let eps = r.gen_range(0.05..2.0);
        let inst = instance(seed + 500, 8, 4);
        let prob = RegularizedProblem::new(&inst.a, &inst.b, inst.family, eps).unwrap();
        let (num, n, m) = (prob.num_costs(), prob.a.len(), prob.b.len());
        let x = random_state(&mut r, num, n, m, 1.0);
        let y = random_state(&mut r, num, n, m, 1.0);
        let (gx, gy) = (grad_f(&x, &prob).unwrap(), grad_f(&y, &prob).unwrap());
        let diff = stacked(&DualState { lambda: gx.lambda, f: gx.f, g: gx.g })
            .iter()
            .zip(stacked(&DualState { lambda: gy.lambda, f: gy.f, g: gy.g }))
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        ratio_worst = ratio_worst.max(diff / state_distance(&x, &y) / lipschitz_l(&prob.family, eps));
    }
    let mut proj_worst = 0.0_f64;
    let mut r = rng(0x9e0);
    for _ in 0..200 {
        let len = r.gen_range(1..=6);
        let v: Vec<f64> = (0..len).map(|_| r.gen_range(-3.0..3.0)).collect();
        let p = simplex_project(&v);
        proj_worst = proj_worst.max(max(p.iter().zip(projection_oracle(&v)).map(|(x, y)| (x - y).abs())));
    }
    let secs = start.elapsed().as_secs_f64();
    rep.line(
        "5 (gradient, Lipschitz constant, projection)",
        fd_worst <= 1e-5 && ratio_worst <= 1.0 && proj_worst <= 1e-10 && secs <= 20.0,
        format!("FD rel. error {fd_worst:.1e} <= 1e-5, worst ratio/L {ratio_worst:.3} <= 1, projection {proj_worst:.1e} <= 1e-10, {secs:.1}s <= 20s"),
    );
}

fn eps_consistency(rep: &mut Report) {
    let start = Instant::now();
    let cfg = ScenarioConfig {
        n: 20,
        m: 20,
        num_days: 1,
        seed: 0,
        ..ScenarioConfig::default()
    };
    let s = gen_dudley_scenario(&cfg).unwrap();
    let (a, b) = (s.mu.weights(), s.nu.weights());
    let exact = eot_exact(a, b, &s.family).unwrap().value;
    let sup = s.family.sup_norm();
    let mut res = Vec::new();
    let mut above = true;
    for factor in [0.5, 0.1, 0.05, 0.01, 0.005] {
        let prob = RegularizedProblem::new(a, b, s.family.clone(), factor * sup).unwrap();
        let report = pam_solve(&prob, &SolveOptions { trace_every: 0, ..SolveOptions::default() }).unwrap();
        above &= report.primal_value >= exact - 1e-9;
        res.push(relative_error(report.primal_value, exact).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    let (first, last) = (res[0], res[res.len() - 1]);
    rep.line(
        "6 (epsilon sweep on the Dudley scenario, n = m = 20)",
        above && last <= 0.05 && last <= first && secs <= 120.0,
        format!("primal >= LP: {above}, RE(eps_min) {last:.4} <= 0.05, RE(eps_max) {first:.4}, {secs:.1}s <= 120s"),
    );
}

fn solver_agreement(rep: &mut Report) {
    let start = Instant::now();
    let (mut agree, mut to_lp, mut monotone, mut spread) = (0.0_f64, 0.0_f64, true, 0.0_f64);
    let mut primal_gap = 0.0_f64;
    for days in [2, 3] {
        let cfg = ScenarioConfig {
            n: 30,
            m: 30,
            num_days: days,
            seed: 0,
            ..ScenarioConfig::default()
        };
        let s = gen_sequential_scenario(&cfg).unwrap();
        let (a, b) = (s.mu.weights(), s.nu.weights());
        let exact = eot_exact(a, b, &s.family).unwrap().value;
        let prob = RegularizedProblem::new(a, b, s.family.clone(), 0.05).unwrap();
        let opts = SolveOptions::default();
        let p = pam_solve(&prob, &opts).unwrap();
        let q = apga_solve(&prob, &SolveOptions { trace_every: 0, ..opts }).unwrap();
        agree = agree.max((p.dual_value - q.dual_value).abs());
        to_lp = to_lp.max(((p.dual_value - exact) / exact).abs()).max(((q.dual_value - exact) / exact).abs());
        primal_gap = primal_gap.max((p.primal_value - exact) / exact);
        monotone &= p.trace.windows(2).all(|w| w[1].dual_value >= w[0].dual_value - 1e-10);
        let v = &p.per_cost_values;
        let hi = v.iter().copied().fold(f64::MIN, f64::max);
        let lo = v.iter().copied().fold(f64::MAX, f64::min);
        spread = spread.max((hi - lo) / hi.abs());
    }
    let secs = start.elapsed().as_secs_f64();
    rep.line(
        "7a (sequential scenario, eps = 0.05: PAM/APGA agreement, monotone PAM trace, equal daily costs)",
        agree <= 1e-3 && monotone && spread <= 1e-4 && secs <= 120.0,
        format!("|PAM - APGA| {agree:.1e} <= 1e-3, monotone trace: {monotone}, daily spread {spread:.1e} <= 1e-4, {secs:.1}s <= 120s"),
    );
    rep.line(
        "7b (sequential scenario, eps = 0.05: final dual values within 1% of the LP value)",
        to_lp <= 0.01,
        format!("worst relative gap {to_lp:.3} <= 0.01 (rounded primal gap {primal_gap:.3})"),
    );
}

fn sinkhorn_equivalence(rep: &mut Report) {
    let mut worst = 0.0_f64;
    for seed in 0..10 {
        let inst = instance(seed + 77, 10, 1);
        let eps = 0.05 + 0.05 * (seed % 4) as f64;
        let prob = RegularizedProblem::new(&inst.a, &inst.b, inst.family.clone(), eps).unwrap();
        let opts = SolveOptions::default();
        let pam = pam_solve(&prob, &opts).unwrap();
        let sk = sinkhorn_baseline(&inst.a, &inst.b, inst.family.matrix(0), eps, &opts).unwrap();
        worst = worst.max((pam.dual_value - sk.value).abs());
    }
    rep.line(
        "8 (N = 1 PAM equals Sinkhorn, 10 instances)",
        worst <= 1e-8,
        format!("max difference {worst:.1e} <= 1e-8"),
    );
}

fn run_cli(out: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_eot"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap_or(-1)
}

fn cli_golden(rep: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&[&str], &str); 3] = [
        (&["--seed", "11", "solve-exact", "--n", "12", "--m", "10", "--days", "3"], "eot_exact.csv"),
        (&["--seed", "11", "solve-entropic", "--n", "12", "--m", "10", "--eps", "0.1"], "report.csv"),
        (&["--seed", "11", "sweep-eps", "--n", "10", "--m", "10", "--no-timing"], "sweep.csv"),
    ];
    let mut identical = true;
    let mut codes_ok = true;
    for (k, (args, file)) in runs.iter().enumerate() {
        let (x, y) = (dir.path().join(format!("{k}a")), dir.path().join(format!("{k}b")));
        codes_ok &= run_cli(&x, args) == 0 && run_cli(&y, args) == 0;
        identical &= std::fs::read(x.join(file)).ok() == std::fs::read(y.join(file)).ok() && x.join(file).exists();
        if *file == "report.csv" {
            identical &= std::fs::read(x.join("trace.csv")).ok() == std::fs::read(y.join("trace.csv")).ok();
        }
    }
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x1,weight\n0,abc\n").unwrap();
    let bad = bad.to_str().unwrap();
    let err_dir = dir.path().join("errors");
    let malformed: [&[&str]; 4] = [
        &["solve-exact", "--mu", bad, "--nu", bad, "--cost", "euclidean"],
        &["solve-entropic", "--eps", "0"],
        &["solve-exact", "--cost", "l1pow:-1"],
        &["dudley", "--mu", bad, "--nu", bad],
    ];
    let exit_twos = malformed.iter().all(|args| run_cli(&err_dir, args) == 2);
    rep.line(
        "9 (CLI golden runs and exit codes)",
        identical && codes_ok && exit_twos && !err_dir.exists(),
        format!("byte-identical reruns: {identical}, exit 0 on success: {codes_ok}, exit 2 on malformed input with no output: {}", exit_twos && !err_dir.exists()),
    );
}

fn main() {
    let mut rep = Report { failures: 0 };
    lp_self_consistency(&mut rep);
    bound_chain(&mut rep);
    dudley_cross(&mut rep);
    reductions(&mut rep);
    entropic_correctness(&mut rep);
    eps_consistency(&mut rep);
    solver_agreement(&mut rep);
    sinkhorn_equivalence(&mut rep);
    cli_golden(&mut rep);
    println!("acceptance: {} line(s) failed", rep.failures);
    if rep.failures > 0 {
        std::process::exit(1);
    }
}
