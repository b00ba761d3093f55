//! End-to-end runs of the `wccp` binary through its public interface.

use std::path::Path;
use std::process::{Command, Output};

use wccp::io::save_measurements_json;
use wccp::model::MeasurementSet;

fn wccp_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wccp"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn assert_ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// `y_i = (z_i' b)^2` for `b = (3, 1)` over four probe directions.
fn save_planted_pair(path: &Path) {
    let factors = vec![1.0, 0.0, 2.0, 0.0, -1.0, 0.0, 1.0, 2.0];
    let y = vec![9.0, 36.0, 9.0, 25.0];
    let data = MeasurementSet::from_rank_one(2, y, factors).unwrap();
    save_measurements_json(&data, path).unwrap();
}

#[test]
fn solve_recovers_planted_signal() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("pair.json");
    save_planted_pair(&data_path);

    let out = wccp_cmd(&[
        "solve",
        "--data",
        data_path.to_str().unwrap(),
        "--penalty",
        "scad",
        "--lambda",
        "0.001",
    ]);
    let report: serde_json::Value = serde_json::from_str(&assert_ok(&out)).unwrap();

    let beta: Vec<f64> = report["beta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // Sign-insensitive match against (3, 1).
    let gap = (beta[0].abs() - 3.0).abs() + (beta[1].abs() - 1.0).abs();
    assert!(gap < 1e-3, "recovered {beta:?}");
    assert_eq!(report["termination"], "tolerance_met");
    assert!(report["fp_residual"].as_f64().unwrap() < 1e-4);
    let trace: Vec<f64> = report["objective_trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(
        report["iterations"].as_u64().unwrap() as usize + 1,
        trace.len()
    );
}

#[test]
fn solve_accepts_warm_start_file_and_writes_out() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("pair.json");
    let start_path = dir.path().join("start.json");
    let out_path = dir.path().join("fit.json");
    save_planted_pair(&data_path);
    std::fs::write(&start_path, "[2.5, 0.5]").unwrap();

    let out = wccp_cmd(&[
        "solve",
        "--data",
        data_path.to_str().unwrap(),
        "--penalty",
        "l1",
        "--lambda",
        "0.01",
        "--init",
        &format!("file:{}", start_path.display()),
        "--algorithm",
        "irl1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!((report["beta"][0].as_f64().unwrap() - 3.0).abs() < 1e-2);
}

#[test]
fn solve_rejects_unknown_penalty_and_short_start() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("pair.json");
    save_planted_pair(&data_path);

    let out = wccp_cmd(&[
        "solve",
        "--data",
        data_path.to_str().unwrap(),
        "--penalty",
        "ridge",
        "--lambda",
        "0.1",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown penalty family"));

    let start_path = dir.path().join("short.json");
    std::fs::write(&start_path, "[1.0]").unwrap();
    let out = wccp_cmd(&[
        "solve",
        "--data",
        data_path.to_str().unwrap(),
        "--penalty",
        "l1",
        "--lambda",
        "0.1",
        "--init",
        &format!("file:{}", start_path.display()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 coordinates"));
}

#[test]
fn tune_reports_constant_level_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("pair.json");
    save_planted_pair(&data_path);

    let out = wccp_cmd(&[
        "tune",
        "--data",
        data_path.to_str().unwrap(),
        "--penalty",
        "l1",
        "--folds",
        "2",
        "--c-grid",
        "0.5,1",
    ]);
    let report: serde_json::Value = serde_json::from_str(&assert_ok(&out)).unwrap();
    let c = report["c"].as_f64().unwrap();
    assert!(c == 0.5 || c == 1.0);
    assert!(report["lambda"].as_f64().unwrap() > 0.0);
    assert_eq!(report["scores"].as_array().unwrap().len(), 2);
}

#[test]
fn experiment_then_summary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("sweep.csv");
    let table_path = dir.path().join("table.txt");
    let svg_path = dir.path().join("curve.svg");

    let out = wccp_cmd(&[
        "experiment",
        "--d",
        "8",
        "--s",
        "2",
        "--sigma",
        "0",
        "--ratios",
        "0.5,1.0",
        "--trials",
        "2",
        "--penalties",
        "scad,l1",
        "--seed",
        "3",
        "--design",
        "rank-one-gaussian",
        "--lambda",
        "1e-6",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_ok(&out);

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "penalty,ratio,trial,seed,relerr,success,iterations,\
         support_precision,support_recall,support_exact,wall_seconds"
    );
    assert_eq!(lines.count(), 2 * 2 * 2, "one row per (penalty, ratio, trial)");

    let out = wccp_cmd(&[
        "summary",
        "--input",
        csv_path.to_str().unwrap(),
        "--out",
        table_path.to_str().unwrap(),
        "--svg",
        svg_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let table = std::fs::read_to_string(&table_path).unwrap();
    assert!(table.starts_with("penalty"));
    // 4 cells + header.
    assert_eq!(table.lines().count(), 5);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
}

#[test]
fn experiment_expands_ratio_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("range.csv");
    let out = wccp_cmd(&[
        "experiment",
        "--d",
        "6",
        "--s",
        "1",
        "--sigma",
        "0",
        "--ratios",
        "0.2:1.0:0.4",
        "--trials",
        "1",
        "--penalties",
        "l1",
        "--design",
        "rank-one-gaussian",
        "--lambda",
        "1e-6",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let ratios: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(ratios, ["0.2", "0.6000000000000001", "1"]);
}

#[test]
fn summary_rejects_missing_and_empty_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = wccp_cmd(&["summary", "--input", dir.path().join("nope.csv").to_str().unwrap()]);
    assert!(!out.status.success());

    let empty = dir.path().join("empty.csv");
    std::fs::write(
        &empty,
        "penalty,ratio,trial,seed,relerr,success,iterations,\
         support_precision,support_recall,support_exact,wall_seconds\n",
    )
    .unwrap();
    let out = wccp_cmd(&["summary", "--input", empty.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no records"));
}
