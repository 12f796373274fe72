use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use eot_core::lp::ot_exact;
use eot_core::measures::{build_cost_matrix, read_measure, CostSpec};

fn eot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eot")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, contents).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn malformed_measure_is_an_input_error_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "x1,x2,weight\n0,0\n");
    let out_dir = dir.path().join("out");
    let out = eot(&["--out", path(&out_dir), "solve-exact", "--mu", &bad, "--nu", &bad, "--cost", "euclidean"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists());
}

#[test]
fn bad_arguments_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let o = path(&out_dir);
    for args in [
        vec!["--out", o, "solve-entropic", "--eps", "0"],
        vec!["--out", o, "solve-entropic", "--eps", "-1"],
        vec!["--out", o, "solve-entropic", "--eps", "0.1", "--cost", "holder:3"],
        vec!["--out", o, "sweep-eps", "--eps", "0.1,0.2"],
        vec!["--out", o, "bench", "--config", "3x3:0.1"],
        vec!["--out", o, "solve-exact", "--no-such-flag"],
    ] {
        let out = eot(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(!out_dir.exists());
}

#[test]
fn measure_files_need_a_cost() {
    let dir = tempfile::tempdir().unwrap();
    let mu = write(dir.path(), "mu.csv", "x1,weight\n0,0.5\n1,0.5\n");
    let out = eot(&["--out", path(dir.path()), "solve-exact", "--mu", &mu, "--nu", &mu]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_without_timing_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = eot(&["--out", path(d), "--seed", "3", "sweep-eps", "--n", "8", "--m", "8", "--no-timing", "--eps-rel", "0.5,0.1"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let x = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(x, fs::read(b.join("sweep.csv")).unwrap());
    let csv = String::from_utf8(x).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(column(&csv, "wall_time_s").iter().all(|t| t.is_nan()));
}

#[test]
fn pam_trace_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = eot(&["--out", path(dir.path()), "solve-entropic", "--eps", "0.1", "--n", "8", "--m", "7", "--plot"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let values = column(&trace, "dual_value");
    assert!(values.len() > 2);
    for w in values.windows(2) {
        assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0), "{} < {}", w[1], w[0]);
    }
    let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lambda: f64 = column(&report, "lambda_1")[0] + column(&report, "lambda_2")[0];
    assert!((lambda - 1.0).abs() <= 1e-9);
    assert!(column(&report, "marginal_residual")[0] <= 1e-9);
    assert!(fs::read_to_string(dir.path().join("trace.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn dudley_of_a_measure_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mu = write(dir.path(), "mu.csv", "x1,x2,weight\n0,0,0.2\n1,0,0.3\n0,3,0.5\n");
    let nu = write(dir.path(), "nu.csv", "x1,x2,weight\n0,0,0.5\n1,0,0.3\n0,3,0.2\n");
    let out = eot(&["--out", path(dir.path()), "dudley", "--mu", &mu, "--nu", &mu]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.path().join("dudley.csv")).unwrap();
    assert_eq!(column(&csv, "value_eot")[0], 0.0);
    assert_eq!(column(&csv, "value_ipm")[0], 0.0);

    let out = eot(&["--out", path(dir.path()), "dudley", "--mu", &mu, "--nu", &nu]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.path().join("dudley.csv")).unwrap();
    let (x, y) = (column(&csv, "value_eot")[0], column(&csv, "value_ipm")[0]);
    assert!(x > 0.0 && (x - y).abs() <= 1e-7, "{x} {y}");

    let moved = write(dir.path(), "moved.csv", "x1,x2,weight\n0,0,0.5\n2,0,0.3\n0,3,0.2\n");
    let out = eot(&["--out", path(dir.path()), "dudley", "--mu", &mu, "--nu", &moved]);
    assert_eq!(code(&out), 2);
}

#[test]
fn single_cost_exact_value_is_ot() {
    let dir = tempfile::tempdir().unwrap();
    let mu = write(dir.path(), "mu.csv", "x1,x2,weight\n0,0,0.25\n1,2,0.25\n3,1,0.5\n");
    let nu = write(dir.path(), "nu.csv", "x1,x2,weight\n0,1,0.6\n2,2,0.4\n");
    let out = eot(&["--out", path(dir.path()), "solve-exact", "--mu", &mu, "--nu", &nu, "--cost", "sqeuclidean"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("eot_exact.csv")).unwrap();
    let value = column(&csv, "value")[0];
    assert_eq!(column(&csv, "lambda_1")[0], 1.0);
    let (m, n) = (read_measure(Path::new(&mu)).unwrap(), read_measure(Path::new(&nu)).unwrap());
    let c = build_cost_matrix(&CostSpec::SquaredEuclidean, m.points(), n.points()).unwrap();
    let ot = ot_exact(m.weights(), n.weights(), &c).unwrap().value;
    assert!((value - ot).abs() <= 1e-12, "{value} {ot}");
    let plan = fs::read_to_string(dir.path().join("plan_1.csv")).unwrap();
    let mass: f64 = plan.lines().flat_map(|l| l.split(',')).map(|v| v.parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() <= 1e-12);
}

#[test]
fn written_scenario_reproduces_the_generated_problem() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    let out = eot(&["--out", path(&s), "--seed", "4", "scenario", "--n", "6", "--m", "5", "--days", "2"]);
    assert_eq!(code(&out), 0);
    let direct = dir.path().join("direct");
    let out = eot(&["--out", path(&direct), "--seed", "4", "solve-exact", "--n", "6", "--m", "5", "--days", "2"]);
    assert_eq!(code(&out), 0);
    let files = dir.path().join("files");
    let cost = |i: usize| format!("file:{}", s.join(format!("cost_{i}.csv")).display());
    let out = eot(&[
        "--out", path(&files), "solve-exact",
        "--mu", path(&s.join("mu.csv")), "--nu", path(&s.join("nu.csv")),
        "--cost", &cost(1), "--cost", &cost(2),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let x = column(&fs::read_to_string(direct.join("eot_exact.csv")).unwrap(), "value")[0];
    let y = column(&fs::read_to_string(files.join("eot_exact.csv")).unwrap(), "value")[0];
    assert!((x - y).abs() <= 1e-12, "{x} {y}");
    assert_eq!(fs::read_to_string(s.join("winds.csv")).unwrap().lines().count(), 3);
}

#[test]
fn bench_writes_three_rows_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = eot(&[
        "--out", path(dir.path()), "bench",
        "--config", "6x6x2:0.2", "--config", "5x4x3:0.3", "--max-iter", "2000",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let solvers: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(solvers, ["pam", "apga", "lp", "pam", "apga", "lp"]);
    let oracle = column(&csv, "oracle");
    let value = column(&csv, "value");
    assert_eq!(oracle[2], value[2]);
    for i in 0..3 {
        assert!(value[i] <= oracle[i] + 1e-9);
    }
    let traj = fs::read_to_string(dir.path().join("bench_trajectory.csv")).unwrap();
    assert!(traj.lines().count() > 6);
}
