use std::process::{Command, Output};

use serde_json::Value;

fn eabf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eabf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_record(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn budget_prints_the_tolerance() {
    let o = eabf(&["budget", "--sigma", "0.0005", "--m", "30", "--b", "0.05", "--tail", "0"]);
    assert!(o.status.success());
    let k: f64 = stdout(&o).trim().parse().unwrap();
    let expected = (0.0005 / 30.0) * 0.05 / (1.0 / (2.0 * std::f64::consts::PI).sqrt());
    assert!((k - expected).abs() < 1e-15 * expected.max(1.0));
}

#[test]
fn infeasible_budget_is_a_json_error() {
    let o = eabf(&["budget", "--sigma", "1", "--m", "10", "--b", "0.05", "--tail", "0.2"]);
    assert_eq!(o.status.code(), Some(1));
    let e = error_record(&o);
    assert_eq!(e["error"], "infeasible_budget");
    assert!(e["message"].as_str().is_some());
}

#[test]
fn unknown_density_is_a_json_error() {
    let o = eabf(&["budget", "--sigma", "1", "--m", "10", "--density", "cauchyish"]);
    assert!(!o.status.success());
    assert!(error_record(&o)["error"].is_string());
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [&["run", "nosuch"][..], &["rates", "--which", "q"], &["budget", "--m", "3"]] {
        let o = eabf(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(error_record(&o)["error"], "usage");
    }
    let help = eabf(&["--help"]);
    assert!(help.status.success());
}

#[test]
fn run_wave_writes_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("wave");
    let o = eabf(&["run", "wave", "--seed", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["seed"], 5);
    let on_disk: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, summary);
    for f in ["config.toml", "data.tsv", "budget_audit.jsonl"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn run_reads_config_and_applies_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wave.toml");
    std::fs::write(&cfg, "seed = 3\n[wave]\nm = 20\n").unwrap();
    let out = dir.path().join("r");
    let o = eabf(&[
        "run", "wave", "--config", cfg.to_str().unwrap(), "--set", "k_big=25", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let snapshot = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(snapshot.contains("seed = 3"));
    assert!(snapshot.contains("m = 20"));
    assert!(snapshot.contains("k_big = 25"));
}

#[test]
fn bad_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 3\n[wave]\nsigmaa = 1.0\n").unwrap();
    let o = eabf(&["run", "wave", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_record(&o)["error"], "config");
    let missing = eabf(&["run", "wave", "--config", "/nonexistent/x.toml"]);
    assert!(!missing.status.success());
    assert!(error_record(&missing)["error"].is_string());
}

#[test]
fn rates_lemma_prints_json() {
    let o = eabf(&["rates", "--which", "lemma"]);
    assert!(o.status.success());
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r["lemma"].as_array().is_some_and(|a| !a.is_empty()));
    assert!(r["k"].is_null());
}
