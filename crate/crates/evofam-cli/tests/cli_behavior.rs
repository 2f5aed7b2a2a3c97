//! End-to-end behavior of the command-line binary: output formats,
//! round-trips, exit codes, and byte determinism, all through real process
//! spawns.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evofam"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const HARMONIC: &str = r#"{
  "T": 3.141592653589793,
  "N": 4,
  "M": 4,
  "alpha": {"family": "constant", "params": {"c": 1.0}},
  "beta": {"family": "zero"},
  "initial": {"phi": [1.0, 0.0, 0.0, 0.0], "psi": [0.0, 0.0, 0.0, 0.0]}
}"#;

// resolved finely enough that every thresholded diagnostic clears its
// budget: the fixed-point/direct gap and the generator residuals all carry
// O(dt^2) error terms
const PERTURBED: &str = r#"{
  "T": 1.0,
  "N": 4,
  "M": 200,
  "alpha": {"family": "affine", "params": {"a": 1.0, "b": 0.5}},
  "beta": {"family": "separable", "params": {"g": {"family": "constant", "params": {"c": 1.0}}, "p": [0.0, 0.1]}},
  "initial": {"phi": [1.0, 0.0, 0.0, 0.0], "psi": [0.0, 0.0, 0.0, 0.0]}
}"#;

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

// ═══════════════════════════════════════════════════ oscillator command

#[test]
fn test_cli_behavior_oscillator_emits_closed_form_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", HARMONIC);
    let out = bin()
        .args(["oscillator", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .args(["--n", "1", "--s", "0"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(tmp.path().join("oscillator.csv")).unwrap();
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["t", "r", "rdot", "c", "cdot"]);
    assert_eq!(rows.len(), 5);
    for row in &rows {
        let t = row[0];
        assert!((row[1] - t.sin()).abs() < 1e-12, "r at t={t}");
        assert!((row[2] - t.cos()).abs() < 1e-12, "rdot at t={t}");
        assert!((row[3] - t.cos()).abs() < 1e-12, "c at t={t}");
        assert!((row[4] + t.sin()).abs() < 1e-12, "cdot at t={t}");
    }

    // every field re-renders to the exact byte sequence it was read from:
    // 17 significant digits round-trip losslessly
    for line in text.lines().skip(1) {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v:.16e}"), field, "lossy round-trip for {field}");
        }
    }
}

#[test]
fn test_cli_behavior_oscillator_base_at_horizon_single_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", HARMONIC);
    let out = bin()
        .args(["oscillator", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .args(["--n", "3", "--s", "3.141592653589793"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);
    let text = std::fs::read_to_string(tmp.path().join("oscillator.csv")).unwrap();
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 1, "base at the horizon leaves a single node");
    let row = &rows[0];
    assert_eq!(row[1], 0.0);
    assert_eq!(row[2], 1.0);
    assert_eq!(row[3], 1.0);
    assert_eq!(row[4], 0.0);
}

#[test]
fn test_cli_behavior_oscillator_rejects_off_grid_base() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", HARMONIC);
    let out = bin()
        .args(["oscillator", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .args(["--n", "1", "--s", "0.5"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not a grid node"), "stderr: {stderr}");
    assert!(!tmp.path().join("oscillator.csv").exists(), "no partial output");
}

// ═══════════════════════════════════════════════════ solve command

#[test]
fn test_cli_behavior_solve_harmonic_first_mode_cosine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", HARMONIC);
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);
    let text = std::fs::read_to_string(tmp.path().join("solution.csv")).unwrap();
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["t", "a_1", "a_2", "a_3", "a_4"]);
    for row in &rows {
        assert!((row[1] - row[0].cos()).abs() < 1e-12);
        for v in &row[2..] {
            assert_eq!(*v, 0.0);
        }
    }
}

#[test]
fn test_cli_behavior_solve_zero_data_zero_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"T": 1.0, "N": 3, "M": 20,
            "alpha": {"family": "affine", "params": {"a": 1.0, "b": 1.0}},
            "beta": {"family": "zero"}}"#,
    );
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);
    let (_, rows) = parse_csv(&std::fs::read_to_string(tmp.path().join("solution.csv")).unwrap());
    for row in &rows {
        for v in &row[1..] {
            assert_eq!(*v, 0.0);
        }
    }
}

#[test]
fn test_cli_behavior_solve_methods_agree_for_perturbed_family() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", PERTURBED);
    for (dir, method) in [("v", "volterra"), ("d", "direct")] {
        let out = bin()
            .args(["solve", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(dir))
            .args(["--method", method])
            .output()
            .unwrap();
        assert_eq!(exit_code(&out), 0, "{method}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let (_, va) = parse_csv(&std::fs::read_to_string(tmp.path().join("v/solution.csv")).unwrap());
    let (_, vb) = parse_csv(&std::fs::read_to_string(tmp.path().join("d/solution.csv")).unwrap());
    for (ra, rb) in va.iter().zip(&vb) {
        for (x, y) in ra.iter().zip(rb).skip(1) {
            assert!((x - y).abs() < 1e-6, "methods disagree: {x} vs {y}");
        }
    }
}

// ═══════════════════════════════════════════════════ check / perturb / convergence

#[test]
fn test_cli_behavior_check_exit_codes_reflect_report() {
    let tmp = tempfile::tempdir().unwrap();
    // well-resolved exactly-solvable configuration: everything passes
    let good = write_config(
        tmp.path(),
        "good.json",
        r#"{"T": 1.0, "N": 4, "M": 100,
            "alpha": {"family": "constant", "params": {"c": 1.0}},
            "beta": {"family": "zero"}}"#,
    );
    let out = bin()
        .args(["check", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(tmp.path().join("good"))
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("good/check.json").exists());

    // an under-resolved grid must complete, flag failures, and exit 1
    let coarse = write_config(
        tmp.path(),
        "coarse.json",
        r#"{"T": 1.0, "N": 4, "M": 10,
            "alpha": {"family": "affine", "params": {"a": 1.0, "b": 0.5}},
            "beta": {"family": "zero"}}"#,
    );
    let out = bin()
        .args(["check", "--config"])
        .arg(&coarse)
        .arg("--out")
        .arg(tmp.path().join("coarse"))
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 1);
    let report = std::fs::read_to_string(tmp.path().join("coarse/check.json")).unwrap();
    assert!(report.contains("\"pass\": false"), "failures must be recorded");
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn test_cli_behavior_check_missing_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("check")
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));

    let out = bin()
        .args(["check", "--config", "/definitely/not/there.json"])
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/not/there.json"));
}

#[test]
fn test_cli_behavior_perturb_writes_report_and_norms() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", PERTURBED);
    let out = bin()
        .args(["perturb", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .arg("--norms")
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(tmp.path().join("perturb.json")).unwrap();
    assert!(report.contains("oracle_equivalence_gap"));
    assert!(report.contains("picard_iterations"));

    let (header, rows) =
        parse_csv(&std::fs::read_to_string(tmp.path().join("perturbed_norms.csv")).unwrap());
    assert_eq!(header, ["t", "norm"]);
    assert_eq!(rows.len(), 201);
    assert!((rows[0][1] - 1.0).abs() < 1e-12, "V(s,s) = Id has unit norm");
}

#[test]
fn test_cli_behavior_convergence_rows_decrease() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"T": 1.0, "N": 4, "M": 50,
            "alpha": {"family": "affine", "params": {"a": 1.0, "b": 0.5}},
            "beta": {"family": "zero"}}"#,
    );
    let out = bin()
        .args(["convergence", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .args(["--levels", "3"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) =
        parse_csv(&std::fs::read_to_string(tmp.path().join("convergence.csv")).unwrap());
    assert_eq!(header, ["n", "m", "n_next", "m_next", "diff"]);
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        assert!(w[1][4] < w[0][4], "differences must decrease: {rows:?}");
    }
}

// ═══════════════════════════════════════════════════ determinism

#[test]
fn test_cli_behavior_repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", PERTURBED);
    for dir in ["r1", "r2"] {
        for sub in ["solve", "check"] {
            let out = bin()
                .args([sub, "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(tmp.path().join(dir))
                .output()
                .unwrap();
            assert_eq!(exit_code(&out), 0, "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    for name in ["solution.csv", "check.json"] {
        let a = std::fs::read(tmp.path().join("r1").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("r2").join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical across runs");
    }
}

#[test]
fn test_cli_behavior_thread_cap_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", PERTURBED);
    for (dir, threads) in [("t1", "1"), ("t2", "2")] {
        let out = bin()
            .args(["check", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(dir))
            .env("EVOFAM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(exit_code(&out), 0);
    }
    let a = std::fs::read(tmp.path().join("t1/check.json")).unwrap();
    let b = std::fs::read(tmp.path().join("t2/check.json")).unwrap();
    assert_eq!(a, b, "worker count must not leak into the reported bytes");
}
