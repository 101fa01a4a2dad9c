use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn memstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memstab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    text.lines().find_map(|l| l.strip_prefix(prefix.as_str())?.parse().ok()).unwrap()
}

fn short_config(dir: &Path, body_extra: &str) -> std::path::PathBuf {
    let text = format!(
        "[model]\ntype = kdvb\nw0 = 0.01\nw1 = 1\nw2 = 2\nw3 = 6\nw4 = 0.1\n\n\
         [kernel]\nfamily = exponential\nd1 = 2\nd2 = 0.01\n\n\
         [grid]\nM = 256\ndt = 0.01\nT = 0.2\nL = 200\ns_f = 10\n\n\
         [run]\ny0 = one_minus_cos(1.0)\nsnapshot_stride = 5\n{body_extra}"
    );
    let path = dir.join("short.cfg");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn check_case1_passes() {
    let o = memstab(&["check", "--preset", "case1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("PASS"), "{s}");
    assert!((value(&s, "alpha0") - 0.005).abs() <= 1e-12, "{s}");
    assert!((value(&s, "alpha0_bound") - 0.45).abs() <= 1e-12, "{s}");
}

#[test]
fn check_case3_lists_two_violations() {
    let o = memstab(&["check", "--preset", "case3"]);
    assert!(o.status.success(), "non-strict check reports without failing");
    let s = stdout(&o);
    assert!(s.contains("FAIL (2 violations)"), "{s}");
    assert!(s.contains("n2 < pi^2 n0"), "{s}");
    assert!(s.contains("alpha0 < 2 n0 n3/|1-n0|^2"), "{s}");

    let strict = memstab(&["check", "--preset", "case3", "--strict"]);
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn strict_run_on_failing_hypotheses_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c3");
    let o = memstab(&["run", "--preset", "case3", "--strict", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.join("energy.csv").exists());
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "emit_plot = true\n");
    let out = dir.path().join("run");
    let o = memstab(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["energy.csv", "snapshots.csv", "trace.csv", "summary.txt", "plots.py"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let energy = fs::read_to_string(out.join("energy.csv")).unwrap();
    let rows: Vec<&str> = energy.lines().collect();
    assert_eq!(rows[0], "t,E");
    // 20 steps plus the initial row
    assert_eq!(rows.len() - 1, 21);
    let e: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-8)));

    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    for key in ["alpha0 = ", "kappa = ", "monotonicity_defect = ", "exp_fit_rate = ", "exp_fit_r2 = "] {
        assert!(summary.contains(key), "summary lacks {key}");
    }
    let snaps = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    // stride 5 over 20 steps: t = 0, 5, 10, 15, 20 steps, 257 nodes each
    assert_eq!(snaps.lines().count() - 1, 5 * 257);
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert!(memstab(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    }
    assert_eq!(fs::read(a.join("energy.csv")).unwrap(), fs::read(b.join("energy.csv")).unwrap());
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "[model]\ntype = kdvb\nw0 = 0.01\nw1 = 1\nw2 = 2\nw3 = 6\nw4 = 1.5\n").unwrap();
    let o = memstab(&["check", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 7"), "{err}");
    assert!(err.contains("|w4| < 1"), "{err}");

    let empty = dir.path().join("empty.cfg");
    fs::write(&empty, "").unwrap();
    let o = memstab(&["check", "--config", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing [model]"));

    assert_eq!(memstab(&["check", "--preset", "case9"]).status.code(), Some(2));
    assert_eq!(memstab(&["check"]).status.code(), Some(2));
}

#[test]
fn missing_config_file_is_io_error() {
    let o = memstab(&["check", "--config", "/nonexistent/memstab.cfg"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_writes_points_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "\n[sweep]\nw0 = 0.01, 0.05\nd2 = 0.01, 0.02\n");
    let out = dir.path().join("sweep");
    let o = memstab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let index = fs::read_to_string(out.join("index.csv")).unwrap();
    let lines: Vec<&str> = index.lines().collect();
    assert_eq!(lines[0], "index,dir,w0,d2,status,steps,energy_final,exp_fit_rate,poly_fit_rate");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("1,point_0001,0.01,0.02,ok,20,"), "{}", lines[2]);
    for i in 0..4 {
        assert!(out.join(format!("point_{i:04}")).join("energy.csv").is_file());
    }
    // larger viscosity decays faster
    let energy = |i: usize| -> f64 { lines[i + 1].split(',').nth(6).unwrap().parse().unwrap() };
    assert!(energy(2) < energy(0));
}

#[test]
fn convergence_prints_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "");
    let o = memstab(&["convergence", "--config", cfg.to_str().unwrap(), "--levels", "32,64,128"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("32/64") && s.contains("64/128"), "{s}");
    let order: f64 = s.lines().find_map(|l| l.strip_prefix("observed_order = ")).unwrap().parse().unwrap();
    assert!(order.is_finite());

    let bad = memstab(&["convergence", "--config", cfg.to_str().unwrap(), "--levels", "32,48,96"]);
    assert_ne!(bad.status.code(), Some(0));
}

#[test]
fn plotscript_exposes_both_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = memstab(&["plotscript", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let script = fs::read_to_string(dir.path().join("plots.py")).unwrap();
    assert!(script.starts_with("#!/usr/bin/env python3"));
    for needle in ["\"plot-energy\"", "\"plot-solution\"", "energy.csv", "snapshots.csv", "summary.txt"] {
        assert!(script.contains(needle), "script lacks {needle}");
    }
}
