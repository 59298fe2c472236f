use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sgdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgdg")).args(args).output().expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every float field must carry exactly 17 significant digits.
fn assert_17_digits(field: &str) {
    let mantissa = field.split(['e', 'E']).next().unwrap().trim_start_matches('-');
    let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
    assert_eq!(digits, 17, "field {field:?}");
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().expect("header").split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn steady_solve_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = sgdg(&[
        "solve", "--problem", "steady-diff", "--nx", "4", "--ny", "4", "--N", "2", "--Q", "2", "--solver", "gmres",
        "--tol", "1e-8", "--eps-trunc", "1e-10", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = csv_rows(&read(&out.join("moments.csv")));
    assert_eq!(header, ["x", "y", "mean", "variance"]);
    // 2 triangles per cell, 3 nodes per triangle.
    assert_eq!(rows.len(), 4 * 4 * 2 * 3);
    for row in &rows {
        assert_eq!(row.len(), 4);
        row.iter().for_each(|f| assert_17_digits(f));
        assert!(row[3].parse::<f64>().unwrap() >= 0.0);
    }

    let report: Value = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    let reports = report.as_array().expect("array of reports");
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["method"], "gmres");
    assert_eq!(reports[0]["termination"], "converged");
    assert!(reports[0]["relative_residual"].as_f64().unwrap() <= 1e-7);

    let (header, rows) = csv_rows(&read(&out.join("history.csv")));
    assert_eq!(header, ["iteration", "relative_residual", "rank"]);
    assert!(!rows.is_empty());
    rows.iter().for_each(|r| assert_17_digits(&r[1]));
}

#[test]
fn direct_and_krylov_solves_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut means = Vec::new();
    for solver in ["direct", "bicgstab"] {
        let out = dir.path().join(solver);
        let o = sgdg(&[
            "solve", "--problem", "steady-conv", "--nx", "4", "--N", "2", "--Q", "2", "--nu", "0.1", "--solver", solver,
            "--tol", "1e-10", "--eps-trunc", "1e-12", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let (_, rows) = csv_rows(&read(&out.join("moments.csv")));
        means.push(rows.iter().map(|r| r[2].parse::<f64>().unwrap()).collect::<Vec<_>>());
    }
    let scale = means[0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (a, b) in means[0].iter().zip(&means[1]) {
        assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
    }
}

#[test]
fn unsteady_solve_reports_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("unsteady");
    let o = sgdg(&[
        "solve", "--problem", "unsteady-diff", "--nx", "4", "--N", "2", "--Q", "2", "--T", "0.1", "--nt", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    let steps: Vec<u64> = report.as_array().unwrap().iter().map(|r| r["step"].as_u64().unwrap()).collect();
    assert_eq!(steps, [1, 2, 3]);
    let (header, rows) = csv_rows(&read(&out.join("history.csv")));
    assert_eq!(header, ["step", "iteration", "relative_residual", "rank"]);
    assert!(rows.iter().any(|r| r[0] == "3"));
    let (_, rows) = csv_rows(&read(&out.join("moments.csv")));
    assert_eq!(rows.len(), 96);
}

#[test]
fn monte_carlo_oracle_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = sgdg(&[
            "oracle", "mc", "--samples", "20", "--problem", "steady-diff", "--nx", "4", "--N", "2", "--seed", "7", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        texts.push(read(&out.join("moments.csv")));
        let summary: Value = serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
        assert_eq!(summary["samples"], 20);
        assert_eq!(summary["skipped"], 0);
        let (header, _) = csv_rows(&read(&out.join("std_errors.csv")));
        assert_eq!(header, ["x", "y", "mean_std_error", "variance_std_error"]);
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn convergence_study_reports_first_order_rates() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgdg(&["study", "convergence", "--levels", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&read(&dir.path().join("convergence.csv")));
    assert_eq!(header, ["nx", "h", "energy_error", "rate"]);
    let nx: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(nx, ["8", "16", "32"]);
    assert!(rows[0][3].is_empty());
    for r in &rows[1..] {
        assert_17_digits(&r[3]);
        assert!(r[3].parse::<f64>().unwrap() > 0.9);
    }
}

#[test]
fn rejects_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["solve", "--problem", "heat", "--out", out],
        vec!["solve", "--problem", "steady-diff", "--solver", "jacobi", "--out", out],
        vec!["solve", "--problem", "steady-diff", "--precond", "ilu", "--out", out],
        vec!["solve", "--problem", "steady-diff", "--nx", "-3", "--out", out],
        vec!["solve", "--problem", "steady-diff"],
    ] {
        let o = sgdg(&args);
        assert!(!o.status.success(), "{args:?} accepted");
        assert!(!o.stderr.is_empty());
    }
    // Parses, but fails validation inside the library.
    let o = sgdg(&["solve", "--problem", "steady-diff", "--nx", "4", "--tol", "1e-8", "--eps-trunc", "1e-4", "--out", out]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn report_json_floats_have_17_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = sgdg(&["solve", "--problem", "steady-diff", "--nx", "4", "--N", "1", "--Q", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out.join("report.json"));
    let line = text.lines().find(|l| l.contains("\"relative_residual\"")).expect("field present");
    let value = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    assert_17_digits(value);
}
