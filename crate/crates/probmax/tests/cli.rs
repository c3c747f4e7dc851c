//! End-to-end checks of the command-line interface.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_probmax"))
}

fn tiny_config_json(out_dir: &str) -> String {
    serde_json::json!({
        "problems": ["example1"],
        "schedules": [
            {"scheme": "msa", "budget": 200},
            {"scheme": "ac_vssa", "budget": 200, "a": 4.0}
        ],
        "replications": 2,
        "base_seed": 7,
        "metric_samples": 20000,
        "trajectory_points": 3,
        "trajectory_samples": 2000,
        "lipschitz_pairs": 30,
        "lipschitz_batch": 300,
        "reference": {"batch": 10000, "max_steps": 20, "eval_samples": 20000},
        "out_dir": out_dir
    })
    .to_string()
}

#[test]
fn bench_writes_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, tiny_config_json(out.to_str().unwrap())).unwrap();
    let output = bin()
        .args(["bench", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(out.join("summary.csv").exists());
    assert!(out.join("trajectories.csv").exists());
    assert!(out.join("report.json").exists());
}

#[test]
fn solve_runs_a_single_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, tiny_config_json(out.to_str().unwrap())).unwrap();
    let output = bin()
        .args([
            "solve",
            "--config",
            cfg_path.to_str().unwrap(),
            "--schedule",
            "1",
            "--replications",
            "1",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("ac_vssa"), "{stdout}");
}

#[test]
fn reference_subcommand_caches() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, tiny_config_json(out.to_str().unwrap())).unwrap();
    let output = bin()
        .args(["reference", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let cache = out.join("cache");
    assert!(cache.exists());
    assert!(std::fs::read_dir(cache).unwrap().count() >= 1);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(
        &cfg_path,
        r#"{"problems": ["example1"], "schedules": [{"scheme": "ac_vssa", "budget": 10, "a": 2.5}]}"#,
    )
    .unwrap();
    let output = bin()
        .args(["bench", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("a > 3"), "{stderr}");
}

#[test]
fn missing_config_exits_one() {
    let output = bin().args(["bench"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}
