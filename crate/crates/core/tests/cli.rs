use std::path::Path;
use std::process::{Command, Output};

fn frisec(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frisec")).args(args).current_dir(dir).output().expect("binary runs")
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(frisec(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn bad_arguments_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(frisec(&["sweep-asc", "--policy", "bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(frisec(&["no-such-command"], dir.path()).status.code(), Some(1));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "unknown_key = 3\n").unwrap();
    let out = frisec(&["validate-bounds", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn validate_bounds_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = frisec(&["validate-bounds", "--out", "b.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("kind,k_b,x,closed_form,oracle"));
    assert!(lines.count() > 200);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "validate-bounds");
}

#[test]
fn small_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, workers: &'static str| {
        ["sweep-asc", "--trials", "512", "--seed", "7", "--workers", workers, "--policy", "fixed-random", "--out", out]
    };
    assert!(frisec(&args("a.csv", "1"), dir.path()).status.success());
    assert!(frisec(&args("b.csv", "2"), dir.path()).status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
}
