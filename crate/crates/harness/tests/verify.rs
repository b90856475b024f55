use std::process::Command;

use moc_harness::verify::{run_verify, Scale, VerifyOptions};

#[test]
fn small_suite_passes_quickly() {
    let report = run_verify(Scale::Small, VerifyOptions::default());
    assert!(report.passed, "{:?}", report.failed());
    assert_eq!(report.checks.len(), 8);
    assert!(report.seconds < 60.0, "{}", report.seconds);
}

#[test]
fn corrupted_gradient_is_named_in_the_report() {
    let report = run_verify(Scale::Small, VerifyOptions { corrupt_gradient: true });
    assert!(!report.passed);
    assert_eq!(report.failed(), vec!["gradient_policy"]);
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_moc");
    let out = Command::new(bin).args(["verify", "--scale", "small"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);

    let out = Command::new(bin).args(["verify", "--corrupt-gradient"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gradient_policy"));

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    std::fs::write(&path, r#"{"env": {"name": "four_rooms"}, "harness": {"episodes": 2, "seeds": 3}}"#).unwrap();
    let out = Command::new(bin).arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("harness.seeds"));
}
