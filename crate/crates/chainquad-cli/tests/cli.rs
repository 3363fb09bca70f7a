//! End-to-end checks of the command-line surface: exit codes, generated
//! artifacts, and the CSV round trip.

use chainquad_cli::export::{csv_column_count, read_csv, write_csv};
use chainquad_cli::scenario::load_scenario;
use chainquad_core::sim::{run, Scenario};
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chainquad"))
}

#[test]
fn unknown_verb_exits_2_with_usage() {
    let out = bin().arg("poke").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "stderr was: {err}");
}

#[test]
fn missing_scenario_file_exits_2() {
    let out = bin()
        .args(["simulate", "--scenario", "/nonexistent/sc.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_fails_on_benchmark_defaults() {
    // The coupled W inequality is conservatively violated by the benchmark
    // gain set, so certification reports FAIL and exits 1.
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["certify", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("result: FAIL"));
    assert!(text.contains("failed: W min eig > 0"));
    // Everything else holds.
    assert!(!text.contains("failed: hurwitz"));
    assert!(!text.contains("failed: c2"));
    assert!(!text.contains("failed: delta"));
    assert!(dir.path().join("certificate.txt").exists());
}

#[test]
fn simulate_writes_artifacts_and_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--duration", "0.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // Certificate failure is a warning, not an error.
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert!(dir.path().join("trajectory.csv").exists());
    assert!(dir.path().join("plot.gp").exists());
    assert!(dir.path().join("metrics.txt").exists());

    let (header, rows) = read_csv(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(header.len(), csv_column_count(5));
    assert_eq!(header[0], "t");
    assert_eq!(rows.len(), 501);
}

#[test]
fn simulate_no_integral_reports_offset() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--no-integral", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text
        .lines()
        .find(|l| l.starts_with("final_pos_error_m:"))
        .expect("metrics line");
    let value: f64 = line.split(':').nth(1).unwrap().trim().parse().unwrap();
    assert!(value >= 0.01, "expected a steady offset without integral action, got {value}");
}

#[test]
fn demo_paper_emits_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["demo-paper", "--duration", "10", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    for f in ["with_integral.csv", "without_integral.csv", "comparison.txt"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let grab = |key: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(key))
            .and_then(|l| l.split(':').nth(1))
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(f64::NAN)
    };
    let with = grab("with_integral.final_pos_error_m");
    let without = grab("without_integral.final_pos_error_m");
    assert!(with <= 0.05 && without >= 0.01 && with < without);
}

#[test]
fn linearize_dumps_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["linearize", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    for f in ["M.txt", "G.txt", "B.txt", "A_closed.txt", "B_closed.txt", "eigenvalues.txt"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let a = std::fs::read_to_string(dir.path().join("A_closed.txt")).unwrap();
    assert_eq!(a.lines().count(), 26);
    let eigs = std::fs::read_to_string(dir.path().join("eigenvalues.txt")).unwrap();
    let max_re = eigs
        .lines()
        .map(|l| l.split_whitespace().next().unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(max_re < 0.0, "closed loop must be Hurwitz, abscissa {max_re}");
}

#[test]
fn validate_subcommand_passes() {
    let out = bin().args(["validate", "--seed", "3"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "output:\n{text}");
    assert!(text.lines().filter(|l| l.contains(": PASS")).count() >= 8, "output:\n{text}");
}

#[test]
fn csv_round_trip_is_exact() {
    let mut sc = Scenario::paper_sim();
    sc.duration = 0.1;
    let log = run(&sc).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_csv(&log, &path).unwrap();
    let (header, rows) = read_csv(&path).unwrap();
    assert_eq!(header.len(), csv_column_count(log.n));
    assert_eq!(rows.len(), log.samples.len());
    for (row, s) in rows.iter().zip(&log.samples) {
        assert_eq!(row[0], s.t);
        assert_eq!(row[1], s.state.position.x);
        assert_eq!(row[6], s.state.velocity.z);
        // R21 is the second row, first column.
        assert_eq!(row[10], s.state.attitude.matrix()[(1, 0)]);
        let f_col = 19 + 6 * log.n;
        assert_eq!(row[f_col], s.thrust);
        assert_eq!(*row.last().unwrap(), s.lyap.unwrap());
    }
}

#[test]
fn scenario_file_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sc.json");
    std::fs::write(
        &path,
        r#"{"preset": "paper-sim", "duration": 0.25, "x0": [0.1, 0.2, 0.0]}"#,
    )
    .unwrap();
    let sc = load_scenario(Path::new(&path)).unwrap();
    assert_eq!(sc.duration, 0.25);
    assert_eq!(sc.x0.x, 0.1);

    // The resolved scenario is runnable.
    let log = run(&sc).unwrap();
    assert_eq!(log.samples.len(), 251);
}
