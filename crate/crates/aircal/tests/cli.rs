//! End-to-end exercises of the `aircal` binary: exit codes, error lines,
//! determinism, and the full simulate -> select -> detect -> correct ->
//! wind-bins pipeline.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aircal"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    cmd.output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn help_works_for_every_subcommand() {
    for sub in [
        "select-proxy",
        "detect",
        "correct",
        "wind-bins",
        "simulate",
        "report",
    ] {
        let out = run(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help failed");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("Usage"), "{sub} --help prints usage");
    }
    assert!(run(&["--help"]).status.success());
}

#[test]
fn select_proxy_knn_on_fixture_network() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("assign.csv");
    let out = run(&[
        "select-proxy",
        "--sites",
        fixture("network_sites.csv").to_str().unwrap(),
        "--method",
        "knn",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = read(&out_path);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "site_id,proxy_id,method,score",
        "assignment header"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9, "one assignment per fixture site");
    for row in &rows {
        assert!(row.contains(",knn_landuse,"), "method column: {row}");
    }
}

#[test]
fn select_proxy_all_writes_comparison_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("cmp.csv");
    let out = run(&[
        "select-proxy",
        "--sites",
        fixture("network_sites.csv").to_str().unwrap(),
        "--method",
        "all",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = read(&out_path);
    assert!(
        text.starts_with("site_id,nearest_geo,knn_landuse"),
        "comparison header, got: {}",
        text.lines().next().unwrap_or("")
    );
    assert_eq!(text.lines().count(), 10, "header plus nine sites");
}

#[test]
fn select_proxy_min_kl_without_obs_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "select-proxy",
        "--sites",
        fixture("network_sites.csv").to_str().unwrap(),
        "--method",
        "min_kl",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success(), "must fail without --obs");
    let err = stderr_of(&out);
    assert!(
        err.lines().any(|l| l.starts_with("error:")),
        "machine-readable error line, got: {err}"
    );
}

#[test]
fn unknown_method_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "select-proxy",
        "--sites",
        fixture("network_sites.csv").to_str().unwrap(),
        "--method",
        "sorcery",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).lines().any(|l| l.starts_with("error:")));
}

#[test]
fn missing_input_file_is_reported_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "select-proxy",
        "--sites",
        "/nonexistent/sites.csv",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = stderr_of(&out);
    assert!(
        err.contains("error:") && err.contains("/nonexistent/sites.csv"),
        "error names the offending path, got: {err}"
    );
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let dir_c = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&dir_a, "7"), (&dir_b, "7"), (&dir_c, "8")] {
        let out = run(&[
            "simulate",
            "--seed",
            seed,
            "--hours",
            "400",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    }
    for name in ["sites.csv", "observations.csv", "truth.csv", "schedule.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical seeds");
    }
    let a = std::fs::read(dir_a.path().join("observations.csv")).unwrap();
    let c = std::fs::read(dir_c.path().join("observations.csv")).unwrap();
    assert_ne!(a, c, "different seeds must differ");
}

#[test]
fn simulate_accepts_a_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--scenario",
        fixture("scenario_gain_drift.txt").to_str().unwrap(),
        "--hours",
        "2500",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let obs = read(&dir.path().join("observations.csv"));
    assert!(obs.contains("SITE") && obs.contains("PROX"));
    let schedule = read(&dir.path().join("schedule.csv"));
    assert!(schedule.contains("gain_ramp"), "drift schedule is emitted");
}

#[test]
fn full_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let sim_dir = dir.path().join("sim");
    let out = run(&[
        "simulate",
        "--seed",
        "3",
        "--hours",
        "1200",
        "--out-dir",
        sim_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "simulate: {}", stderr_of(&out));
    let sites = sim_dir.join("sites.csv");
    let obs = sim_dir.join("observations.csv");

    let assign = dir.path().join("assignments.csv");
    let out = run(&[
        "select-proxy",
        "--sites",
        sites.to_str().unwrap(),
        "--obs",
        obs.to_str().unwrap(),
        "--method",
        "min_kl",
        "--out",
        assign.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "select-proxy: {}", stderr_of(&out));

    let detect_dir = dir.path().join("detect");
    let out = run(&[
        "detect",
        "--sites",
        sites.to_str().unwrap(),
        "--obs",
        obs.to_str().unwrap(),
        "--assignments",
        assign.to_str().unwrap(),
        "--out-dir",
        detect_dir.to_str().unwrap(),
        "--stride",
        "2",
    ]);
    assert!(out.status.success(), "detect: {}", stderr_of(&out));
    let trail = read(&detect_dir.join("trail_S1.csv"));
    assert!(trail.starts_with("timestamp_utc,site_id,proxy_id,completeness,ks_p"));
    assert!(trail.lines().count() > 100, "trail has entries");

    let correct_dir = dir.path().join("correct");
    let out = run(&[
        "correct",
        "--sites",
        sites.to_str().unwrap(),
        "--obs",
        obs.to_str().unwrap(),
        "--assignments",
        assign.to_str().unwrap(),
        "--out-dir",
        correct_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "correct: {}", stderr_of(&out));
    let corrected = read(&correct_dir.join("corrected_S1.csv"));
    assert!(corrected.starts_with("timestamp_utc,site_id,raw_ppb,corrected_ppb"));

    let wind_dir = dir.path().join("wind");
    let out = run(&[
        "wind-bins",
        "--sites",
        sites.to_str().unwrap(),
        "--obs",
        obs.to_str().unwrap(),
        "--assignments",
        assign.to_str().unwrap(),
        "--out-dir",
        wind_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "wind-bins: {}", stderr_of(&out));
    let wind = read(&wind_dir.join("wind_S1.csv"));
    assert!(wind.starts_with("dir_center_deg,speed_bin_low_ms,n_hours,mean_alarm_sum"));

    let out = run(&[
        "report",
        "--sites",
        sites.to_str().unwrap(),
        "--obs",
        obs.to_str().unwrap(),
        "--assignments",
        assign.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "report: {}", stderr_of(&out));
    assert!(!String::from_utf8_lossy(&out.stdout).is_empty());
}

#[test]
fn detect_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sim_dir = dir.path().join("sim");
    assert!(run(&[
        "simulate",
        "--seed",
        "11",
        "--hours",
        "600",
        "--out-dir",
        sim_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let sites = sim_dir.join("sites.csv");
    let obs = sim_dir.join("observations.csv");
    let assign = dir.path().join("assignments.csv");
    assert!(run(&[
        "select-proxy",
        "--sites",
        sites.to_str().unwrap(),
        "--method",
        "nearest",
        "--out",
        assign.to_str().unwrap(),
    ])
    .status
    .success());
    let d1 = dir.path().join("d1");
    let d2 = dir.path().join("d2");
    for d in [&d1, &d2] {
        assert!(run(&[
            "detect",
            "--sites",
            sites.to_str().unwrap(),
            "--obs",
            obs.to_str().unwrap(),
            "--assignments",
            assign.to_str().unwrap(),
            "--out-dir",
            d.to_str().unwrap(),
        ])
        .status
        .success());
    }
    let a = std::fs::read(d1.join("trail_S1.csv")).unwrap();
    let b = std::fs::read(d2.join("trail_S1.csv")).unwrap();
    assert_eq!(a, b, "repeated detect runs differ");
}
