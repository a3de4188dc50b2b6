//! Black-box tests of the installed binary: flag parsing, exit codes, the
//! seed environment variable, and artifact round trips between subcommands.

use std::path::PathBuf;
use std::process::{Command, Output};

fn cli() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_unilearn"));
    cmd.env_remove("UNILEARN_SEED");
    cmd
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("unilearn-cli-{}-{tag}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed (exit {:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn bounds_reports_the_headline_sample_count() {
    let out = cli()
        .args([
            "bounds", "--d", "15", "--L", "7", "--c", "2", "--q", "inf", "--epsilon",
            "0.0009765625", "--format", "json",
        ])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(out.status.success());
    let got = v["min_samples_log2"].as_f64().unwrap();
    let want = 15.0 + 105.0 + 75.0 * 45.0f64.log2();
    assert!(((got - want) / want).abs() < 1e-12, "{got} != {want}");
    // The same query in table format mentions the same number.
    let table = stdout_of(
        &cli()
            .args([
                "bounds", "--d", "15", "--L", "7", "--c", "2", "--q", "inf", "--epsilon",
                "0.0009765625",
            ])
            .output()
            .unwrap(),
    );
    assert!(table.contains("min_samples_log2"));
    assert!(table.contains("531.888982"));
}

#[test]
fn construct_verify_recover_round_trip() {
    let dir = scratch_dir("roundtrip");
    let net = dir.join("net.json");
    let summary = stdout_of(
        &cli()
            .args([
                "construct", "--d", "1", "--s", "1", "--M", "4", "--y", "0.375", "--L", "3",
                "--B", "3", "--c", "1.2", "--q", "2", "--out",
                net.to_str().unwrap(),
            ])
            .output()
            .unwrap(),
    );
    assert!(summary.contains("construction artifact"), "summary line: {summary}");
    // The artifact doubles as a plain network file.
    let text = std::fs::read_to_string(&net).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["arch"].is_array() && v["weights"].is_array() && v["biases"].is_array());

    let verify = stdout_of(
        &cli()
            .args(["verify", net.to_str().unwrap(), "--format", "json"])
            .output()
            .unwrap(),
    );
    let v: serde_json::Value = serde_json::from_str(&verify).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
    assert_eq!(v["in_class"], serde_json::Value::Bool(true));

    let recover = stdout_of(
        &cli()
            .args([
                "recover", "--target", net.to_str().unwrap(), "--m", "64", "--mc-samples",
                "2048", "--format", "json",
            ])
            .output()
            .unwrap(),
    );
    let v: serde_json::Value = serde_json::from_str(&recover).unwrap();
    assert_eq!(v["within_guarantee"], serde_json::Value::Bool(true));
    let measured = v["measured_sup_error"].as_f64().unwrap();
    let guaranteed = v["guaranteed_sup_error"].as_f64().unwrap();
    assert!(measured <= guaranteed);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn attack_is_deterministic_for_a_fixed_seed() {
    let args = [
        "attack", "--method", "zero", "--m", "1", "--d", "1", "--p", "inf", "--mc-samples",
        "1024", "--seed", "42", "--format", "json",
    ];
    let a = stdout_of(&cli().args(args).output().unwrap());
    let b = stdout_of(&cli().args(args).output().unwrap());
    assert_eq!(a, b, "same seed must reproduce the identical report");
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(v["measured_error"].as_f64().unwrap() >= v["theoretical_floor"].as_f64().unwrap());
    assert!(v["untouched_count"].as_u64().unwrap() >= 1);
}

#[test]
fn seed_env_var_matches_the_flag() {
    let flagged = stdout_of(
        &cli()
            .args([
                "attack", "--method", "grid", "--m", "9", "--d", "1", "--p", "1", "--mc-samples",
                "1024", "--seed", "123", "--format", "json",
            ])
            .output()
            .unwrap(),
    );
    let via_env = stdout_of(
        &cli()
            .env("UNILEARN_SEED", "123")
            .args([
                "attack", "--method", "grid", "--m", "9", "--d", "1", "--p", "1", "--mc-samples",
                "1024", "--format", "json",
            ])
            .output()
            .unwrap(),
    );
    assert_eq!(flagged, via_env, "UNILEARN_SEED must act exactly like --seed");
}

#[test]
fn usage_errors_exit_2_and_module_errors_exit_1() {
    // Unknown flag: argument parsing.
    let out = cli().args(["bounds", "--not-a-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Missing required argument: argument parsing.
    let out = cli().args(["bounds", "--d", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Structurally valid call, missing companion flag: still a usage error.
    let out = cli()
        .args(["attack", "--method", "zero", "--d", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Valid invocation that fails inside the library (width below 3s).
    let out = cli()
        .args([
            "construct", "--d", "2", "--s", "2", "--M", "2", "--y", "0.5,0.5", "--L", "3", "--B",
            "3", "--c", "1", "--q", "inf",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Nonexistent input file.
    let out = cli()
        .args(["verify", "/no/such/file.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_without_a_file_runs_the_smoke_suite() {
    let text = stdout_of(&cli().args(["verify", "--format", "json"]).output().unwrap());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() >= 5);
    for c in checks {
        assert_eq!(c["passed"], serde_json::Value::Bool(true), "check failed: {c}");
    }
}
