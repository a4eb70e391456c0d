//! End-to-end tests against the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn dkalman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dkalman"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn simulate_series(dir: &Path, n: usize, seed: u64) -> std::path::PathBuf {
    let csv = dir.join(format!("sim_{seed}.csv"));
    let out = dkalman(&[
        "simulate",
        "--model",
        "trend",
        "--trend-order",
        "1",
        "--init",
        "1.0,1.0",
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    csv
}

fn strip_timestamp(report: &str) -> String {
    report
        .lines()
        .filter(|line| !line.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn simulate_then_fit_with_true_init_converges() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_series(dir.path(), 400, 3);
    let report_path = dir.path().join("fit.json");
    let out = dkalman(&[
        "fit",
        "--model",
        "trend",
        "--trend-order",
        "1",
        "--data",
        csv.to_str().unwrap(),
        "--init",
        "1.0,1.0",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["fit"]["converged"], true);
    assert!(report["criteria"]["b_gic"].as_f64().is_some());
}

#[test]
fn fit_report_identities_hold_as_printed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_series(dir.path(), 250, 9);
    let report_path = dir.path().join("fit.json");
    let out = dkalman(&[
        "fit",
        "--model",
        "trend",
        "--data",
        csv.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let c = &report["criteria"];
    let loglik = c["loglik"].as_f64().unwrap();
    let p = c["p"].as_f64().unwrap();
    let b = c["b_gic"].as_f64().unwrap();
    assert_eq!(c["aic"].as_f64().unwrap(), -2.0 * loglik + 2.0 * p);
    assert_eq!(c["gic"].as_f64().unwrap(), -2.0 * loglik + 2.0 * b);
}

#[test]
fn reports_are_byte_identical_except_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_series(dir.path(), 150, 5);
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = dkalman(&[
            "fit",
            "--model",
            "trend",
            "--data",
            csv.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read_to_string(&path).unwrap()
    };
    let a = run("a.json");
    let b = run("b.json");
    assert_eq!(strip_timestamp(&a), strip_timestamp(&b));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate_series(dir.path(), 50, 11);
    let a_text = std::fs::read_to_string(&a).unwrap();
    std::fs::remove_file(&a).unwrap();
    let b = simulate_series(dir.path(), 50, 11);
    assert_eq!(a_text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn non_numeric_row_exits_2_and_cites_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "1.0\n2.0\n3.0\nabc\n").unwrap();
    let out = dkalman(&["fit", "--model", "trend", "--data", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 4"), "{stderr}");
}

#[test]
fn gradcheck_passes_on_simulated_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_series(dir.path(), 120, 13);
    let report_path = dir.path().join("gc.json");
    let out = dkalman(&[
        "gradcheck",
        "--model",
        "seasonal",
        "--period",
        "4",
        "--data",
        csv.to_str().unwrap(),
        "--tol",
        "1e-4",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["gradient"]["pass"], true);
    assert_eq!(report["hessian"]["pass"], true);
    assert!(report["gradient"]["max_rel_error"].as_f64().unwrap() < 1e-4);
}

#[test]
fn gradcheck_tolerance_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_series(dir.path(), 80, 17);
    let out = dkalman(&[
        "gradcheck",
        "--model",
        "trend",
        "--data",
        csv.to_str().unwrap(),
        "--tol",
        "1e-18",
        "--hessian-tol",
        "1e-18",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compare_ranks_by_gic_and_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_series(dir.path(), 200, 19);
    let report_path = dir.path().join("cmp.json");
    let out = dkalman(&[
        "compare",
        "--data",
        csv.to_str().unwrap(),
        "--period",
        "4",
        "--max-ar",
        "1",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("m1 m2 m3"), "table missing: {stdout}");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    // Rows with a defined GIC come first, ascending.
    let gics: Vec<Option<f64>> = rows.iter().map(|r| r["gic"].as_f64()).collect();
    let defined: Vec<f64> = gics.iter().flatten().copied().collect();
    assert!(defined.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(report["best"], rows[0]["label"]);
    // Random-walk data: the first-order trend model should win.
    assert_eq!(rows[0]["label"], "(1,0,0)");
}

#[test]
fn repeated_init_flags_run_multiple_starts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_series(dir.path(), 150, 23);
    let report_path = dir.path().join("fit.json");
    let out = dkalman(&[
        "fit",
        "--model",
        "trend",
        "--data",
        csv.to_str().unwrap(),
        "--init",
        "1.0,1.0",
        "--init",
        "1e-4,2e-4",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let starts = report["starts"].as_array().unwrap();
    assert_eq!(starts.len(), 2);
    // Ranked by log-likelihood, best first; the detailed fit is the head.
    let l0 = starts[0]["loglik"].as_f64().unwrap();
    let l1 = starts[1]["loglik"].as_f64().unwrap();
    assert!(l0 >= l1);
    assert_eq!(report["fit"]["loglik"].as_f64().unwrap(), l0);
}

#[test]
fn singular_j_exits_3_with_null_b_gic() {
    // A seasonal model on plain random-walk data collapses its seasonal
    // variance to the working floor; the dead parameter makes J
    // numerically singular.
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_series(dir.path(), 300, 7);
    let report_path = dir.path().join("fit.json");
    let out = dkalman(&[
        "fit",
        "--model",
        "seasonal",
        "--period",
        "4",
        "--data",
        csv.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report["criteria"]["b_gic"].is_null());
    assert!(report["criteria"]["gic"].is_null());
    // AIC stays defined.
    assert!(report["criteria"]["aic"].as_f64().is_some());
}

#[test]
fn bad_init_length_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_series(dir.path(), 60, 29);
    let out = dkalman(&[
        "fit",
        "--model",
        "trend",
        "--data",
        csv.to_str().unwrap(),
        "--init",
        "1.0,1.0,1.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_data_file_exits_2() {
    let out = dkalman(&["fit", "--model", "trend", "--data", "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(2));
}
