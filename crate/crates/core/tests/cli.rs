//! End-to-end checks of the `sea-oco` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sea-oco");

const SMALL: &str = r#"
[env]
preset = "iid"
set = "box"
half_width = 0.7071067811865476
mean = [1.0, 0.0]
sigma = 1.0

[learner]
preset = "oftrl"

[run]
horizons = [50, 100, 200]
seeds = 3
"#;

fn sea_oco(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("SEA_OCO_SEED").output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = sea_oco(&["run", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.path().join("res/iid_oftrl.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("T,seed,regret_final,sigma_bar,Sigma_bar,bound_thm1,bound_thm3,eta_final"));
    assert_eq!(lines.count(), 9);

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("res/iid_oftrl_summary.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["env"]["preset"], "iid");
    assert_eq!(json["horizons"].as_array().unwrap().len(), 3);
    assert!(json["slope"].is_number());
    assert!(json["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn overrides_and_seed_variable_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let read = |name: &str| fs::read_to_string(dir.path().join(name).join("iid_oftrl.csv")).unwrap();

    sea_oco(&["run", "--config", &cfg, "--out", "a"], dir.path());
    sea_oco(&["run", "--config", &cfg, "--out", "b", "--set", "env.sigma=0.5"], dir.path());
    let seeded = Command::new(BIN)
        .args(["run", "--config", &cfg, "--out", "c"])
        .current_dir(dir.path())
        .env("SEA_OCO_SEED", "7")
        .output()
        .unwrap();
    assert!(seeded.status.success());
    assert_ne!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));

    sea_oco(&["run", "--config", &cfg, "--out", "d"], dir.path());
    assert_eq!(read("a"), read("d"));
}

#[test]
fn worst_case_flag_runs_the_worst_case_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = sea_oco(&["run", "--config", &cfg, "--out", "res", "--worst-case"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("res/iid_oftrl_summary.json")).unwrap()).unwrap();
    let names: Vec<&str> = json["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"worst_case_every_run"), "{names:?}");
}

#[test]
fn sweep_expands_the_horizon_grid() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("horizons = [50, 100, 200]", "sweep_min = 16\nsweep_max = 64\nsweep_factor = 2");
    let cfg = write_config(dir.path(), &text);
    let out = sea_oco(&["sweep", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("res/iid_oftrl_summary.json")).unwrap()).unwrap();
    let ts: Vec<u64> = json["horizons"].as_array().unwrap().iter().map(|h| h["T"].as_u64().unwrap()).collect();
    assert_eq!(ts, [16, 32, 64]);
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = sea_oco(&["run", "--config", "nope.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.toml"));

    let cfg = write_config(dir.path(), &SMALL.replace("sigma = 1.0", "sigma = 1.0\nsigmaa = 2.0"));
    let unknown = sea_oco(&["run", "--config", &cfg], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("env.sigmaa"));

    let cfg = write_config(dir.path(), SMALL);
    let bad_override = sea_oco(&["run", "--config", &cfg, "--set", "run.colour=3"], dir.path());
    assert_eq!(bad_override.status.code(), Some(2));

    assert_eq!(sea_oco(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(sea_oco(&["verify", "--criterion", "11"], dir.path()).status.code(), Some(2));
}

#[test]
fn failed_trials_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    // a single-pass pool shorter than the horizon runs out mid-trial
    let rom = r#"
[env]
preset = "rom"
set = "ball"
mean = [0.5, 0.0]
spread = 1.0
pool_size = 10

[run]
horizons = [20]
seeds = 1
"#;
    let cfg = write_config(dir.path(), rom);
    let out = sea_oco(&["run", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_prints_one_line_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = sea_oco(&["verify", "--criterion", "9", "--criterion", "10"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("[PASS]  9."));
    assert!(lines[1].starts_with("[PASS] 10."));
}
