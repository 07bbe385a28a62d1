use std::process::{Command, Output};

fn concomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_concomp")).args(args).env_remove("CONCOMP_SEED").output().unwrap()
}

#[test]
fn passing_check_exits_zero_and_prints_report() {
    let out = concomp(&["enumerate", "--mechanism", "rr", "--epsilon", "1.0986122886681098", "--delta", "0.1"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert!((report["delta_measured"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    for field in ["epsilon", "delta_measured", "bound", "margin", "trials", "ci"] {
        assert!(report.get(field).is_some(), "{field}");
    }
}

#[test]
fn failing_check_exits_one() {
    // Below Σε the improved basic δ no longer bounds the measured slack.
    let out = concomp(&["composition", "--epsilon", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_delta_is_a_usage_error() {
    let out = concomp(&["counterexample", "--delta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn config_errors_name_the_line() {
    let dir = std::env::temp_dir().join(format!("concomp-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, "{\n  \"seed\": 3,\n  \"trails\": 10\n}\n").unwrap();
    let out = concomp(&["counterexample", "--config", path.to_str().unwrap()]);
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("trails"), "{err}");
}

#[test]
fn seed_changes_monte_carlo_output() {
    let a = concomp(&["counterexample", "--trials", "500", "--seed", "1"]);
    let b = concomp(&["counterexample", "--trials", "500", "--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}
