//! End-to-end tests of the binary: exit codes, report fields, golden
//! reproducibility, and the expression-file surface.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bisep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bisep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn reproduce_main_succeeds_and_reports_violation() {
    let output = bisep(&["reproduce", "main"]);
    assert_eq!(
        exit_code(&output),
        0,
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report = stdout_json(&output);
    let s = report["s_value"].as_f64().unwrap();
    assert!((s - 3.0069).abs() <= 1e-3, "S = {s}");
    assert_eq!(report["verdicts"]["bell_violated"], Value::Bool(true));
    assert_eq!(
        report["verdicts"]["biseparable_premise_passed"],
        Value::Bool(true)
    );
    assert_eq!(report["run_config"]["command"], "reproduce");
    assert_eq!(report["run_config"]["which"], "main");
    assert_eq!(report["local_bound"].as_f64().unwrap(), 3.0);
    let omega = report["point"]["omega"].as_f64().unwrap();
    assert!((omega - 0.5682).abs() <= 1e-3);
}

#[test]
fn reproduce_appendix_matches_published_optimum() {
    let output = bisep(&["reproduce", "appendix"]);
    assert_eq!(exit_code(&output), 0);
    let report = stdout_json(&output);
    let s = report["s_value"].as_f64().unwrap();
    assert!((s - 3.0187).abs() <= 1e-3, "S = {s}");
    let p1 = report["weights"]["p1"].as_f64().unwrap();
    assert!((p1 - 0.0338).abs() <= 1e-3);
}

#[test]
fn reproduce_is_bit_stable_across_runs() {
    let a = bisep(&["reproduce", "main"]);
    let b = bisep(&["reproduce", "main"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn injected_fault_flips_the_exit_code() {
    let output = bisep(&["reproduce", "main", "--inject-s-offset", "0.01"]);
    assert_eq!(exit_code(&output), 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("expected 3.0069"), "stderr: {stderr}");
}

#[test]
fn certify_accepts_angle_expressions() {
    let output = bisep(&[
        "certify", "--alpha", "pi/12", "--beta", "pi/4", "--gamma", "5*pi/12", "--theta1",
        "2*pi/9", "--theta2", "-4*pi/9",
    ]);
    assert_eq!(
        exit_code(&output),
        0,
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report = stdout_json(&output);
    assert_eq!(report["verdicts"]["bell_violated"], Value::Bool(true));
    // default branch selection picks the first branch with valid weights
    assert_eq!(report["point"]["branch"].as_u64().unwrap(), 0);
}

#[test]
fn commuting_measurements_never_violate() {
    let output = bisep(&[
        "certify", "--alpha", "pi/12", "--beta", "pi/4", "--gamma", "5*pi/12", "--theta1", "0",
        "--theta2", "0",
    ]);
    assert_eq!(exit_code(&output), 0);
    let report = stdout_json(&output);
    let s = report["s_value"].as_f64().unwrap();
    assert!(s <= 3.0, "S = {s}");
    assert_eq!(report["verdicts"]["bell_violated"], Value::Bool(false));
}

#[test]
fn certify_infeasible_point_exits_2_with_reason() {
    let output = bisep(&[
        "certify", "--alpha", "0.2", "--beta", "1.4", "--gamma", "2.3", "--theta1", "0.1",
        "--theta2", "0.2",
    ]);
    assert_eq!(exit_code(&output), 2);
    let report = stdout_json(&output);
    assert!(report["infeasible"]
        .as_str()
        .unwrap()
        .contains("discriminant"));
}

#[test]
fn certify_explicit_omega_conflicts_with_branch() {
    let output = bisep(&[
        "certify", "--alpha", "1", "--beta", "1", "--gamma", "1", "--omega", "0.5", "--branch",
        "0", "--theta1", "0", "--theta2", "0",
    ]);
    assert_eq!(exit_code(&output), 3);
}

#[test]
fn bad_angle_expression_is_a_usage_error() {
    let output = bisep(&[
        "certify", "--alpha", "sin(1)", "--beta", "1", "--gamma", "1", "--theta1", "0", "--theta2",
        "0",
    ]);
    assert_eq!(exit_code(&output), 3);
}

#[test]
fn optimize_writes_report_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let history_path = dir.path().join("history.csv");
    let output = bisep(&[
        "optimize",
        "--seed",
        "1",
        "--starts",
        "3",
        "--max-iters",
        "80",
        "--out",
        report_path.to_str().unwrap(),
        "--history",
        history_path.to_str().unwrap(),
    ]);
    assert_eq!(
        exit_code(&output),
        0,
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report["s_value"].as_f64().unwrap() > 2.0);
    assert_eq!(report["run_config"]["seed"].as_u64().unwrap(), 1);

    let history = std::fs::read_to_string(&history_path).unwrap();
    let mut lines = history.lines();
    assert_eq!(
        lines.next().unwrap(),
        "start,iteration,s_value,alpha,beta,gamma,theta1,theta2"
    );
    assert!(lines.count() >= 3, "history should log improvements");
}

#[test]
fn optimize_clamped_to_reference_point_returns_it() {
    let output = bisep(&[
        "optimize",
        "--starts",
        "1",
        "--init",
        "pi/12,pi/4,5*pi/12,2*pi/9,-4*pi/9",
        "--radius",
        "0",
    ]);
    assert_eq!(
        exit_code(&output),
        0,
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report = stdout_json(&output);
    let s = report["s_value"].as_f64().unwrap();
    assert!((s - 3.00685218693).abs() <= 1e-9, "S = {s}");
}

#[test]
fn optimize_from_infeasible_clamp_exits_2() {
    let output = bisep(&[
        "optimize",
        "--starts",
        "1",
        "--init",
        "0.2,1.4,2.3,0,0",
        "--radius",
        "0",
    ]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn scan_emits_the_documented_csv_columns() {
    let output = bisep(&[
        "scan",
        "--grid",
        "pi/12:pi/12:1,pi/4:pi/4:1,5*pi/12:5*pi/12:1",
    ]);
    assert_eq!(exit_code(&output), 0);
    let text = String::from_utf8_lossy(&output.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha,beta,gamma,discriminant,degenerate,branch_count,\
         omega_1,omega_2,omega_3,omega_4,\
         feasible_1,feasible_2,feasible_3,feasible_4,any_feasible,best_s"
    );
    let row = lines.next().unwrap();
    assert!(row.contains(",true,"), "feasible cell expected: {row}");
    assert!(row.ends_with(','), "best_s empty when not requested: {row}");
}

#[test]
fn scan_json_format_parses() {
    let output = bisep(&[
        "scan",
        "--grid",
        "0.1:0.3:2,0.2:0.4:2,0.3:0.5:2",
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&output), 0);
    let report = stdout_json(&output);
    assert_eq!(report["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn malformed_grid_is_a_usage_error() {
    let output = bisep(&["scan", "--grid", "1:2"]);
    assert_eq!(exit_code(&output), 3);
    let output = bisep(&["scan", "--grid", "1:2:0,1:2:1,1:2:1"]);
    assert_eq!(exit_code(&output), 3);
}

#[test]
fn local_bound_builtin_is_three() {
    let output = bisep(&["local-bound", "sliwa5"]);
    assert_eq!(exit_code(&output), 0);
    let report = stdout_json(&output);
    assert_eq!(report["bound"].as_f64().unwrap(), 3.0);
    assert_eq!(report["optimal_strategy_count"].as_u64().unwrap(), 41);
    assert_eq!(report["terms"].as_object().unwrap().len(), 17);
}

#[test]
fn local_bound_reads_expression_files() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("single.bell");
    std::fs::write(&file, "# lone observable\n1 A:1\n").unwrap();
    let output = bisep(&["local-bound", file.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0);
    assert_eq!(stdout_json(&output)["bound"].as_f64().unwrap(), 1.0);

    // negating every coefficient turns the max into 13
    let negated = dir.path().join("negated.bell");
    let mut text = String::new();
    let sliwa = bisep(&["local-bound", "sliwa5"]);
    let terms = stdout_json(&sliwa)["terms"].as_object().unwrap().clone();
    for (label, coef) in &terms {
        let mut monos = String::new();
        for chunk in label.as_bytes().chunks(2) {
            monos.push_str(&format!(" {}:{}", chunk[0] as char, chunk[1] as char));
        }
        text.push_str(&format!("{}{}\n", -coef.as_i64().unwrap(), monos));
    }
    std::fs::write(&negated, text).unwrap();
    let output = bisep(&["local-bound", negated.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0);
    assert_eq!(stdout_json(&output)["bound"].as_f64().unwrap(), 13.0);
}

#[test]
fn malformed_expression_file_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.bell");
    std::fs::write(&file, "1 A:1\n1 D:2\n").unwrap();
    let output = bisep(&["local-bound", file.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 3);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("line 2, column 3"),
        "stderr should pinpoint the error: {stderr}"
    );
}

#[test]
fn missing_expression_file_is_a_usage_error() {
    let output = bisep(&["local-bound", "/nonexistent/path.bell"]);
    assert_eq!(exit_code(&output), 3);
}

#[test]
fn unknown_flag_exits_3_and_help_exits_0() {
    let output = bisep(&["certify", "--frobnicate"]);
    assert_eq!(exit_code(&output), 3);
    let output = bisep(&["--help"]);
    assert_eq!(exit_code(&output), 0);
}

#[test]
fn out_flag_writes_the_report_to_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let output = bisep(&["reproduce", "main", "--out", path.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0);
    assert!(output.stdout.is_empty());
    assert!(Path::new(&path).exists());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["tool"]["name"], "bisep");
}
