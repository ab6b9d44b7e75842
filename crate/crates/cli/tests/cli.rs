//! Exit codes and output of the command-line binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.json"))
}

fn conftk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conftk")).args(args).output().unwrap()
}

#[test]
fn passing_check_exits_zero() {
    let path = fixture("berger_sphere");
    let out = conftk(&["check", path.to_str().unwrap(), "--only", "bianchi,star_ricci_3d"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bianchi"));
}

#[test]
fn bad_options_exit_three() {
    let path = fixture("flat_r");
    let path = path.to_str().unwrap();
    assert_eq!(conftk(&["check", path, "--order", "5"]).status.code(), Some(3));
    assert_eq!(conftk(&["check", path, "--only", "no_such_check"]).status.code(), Some(3));
    assert_eq!(conftk(&["check", path, "--bogus"]).status.code(), Some(3));
    assert_eq!(conftk(&["check", "/nonexistent/manifest.json"]).status.code(), Some(3));
}

#[test]
fn geodesic_writes_samples_and_reports_domain_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixture("flat_split");
    let out_path = dir.path().join("g.jsonl");
    let out = conftk(&["geodesic", path.to_str().unwrap(), "--run", "diagonal", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["status"], "ok");

    let out = conftk(&["geodesic", path.to_str().unwrap(), "--run", "escape", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn curvature_prints_round_sphere_scalar() {
    let path = fixture("s3_round");
    let out = conftk(&["curvature", path.to_str().unwrap(), "--chart", "s3", "--at", "pi/3,0.4,-0.2"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let scal = text.lines().find_map(|l| l.strip_prefix("Scal")).unwrap().trim();
    let scal: f64 = scal.parse().unwrap();
    assert!((scal - 6.0).abs() < 1e-10, "{scal}");
    assert!(text.contains("W_ijkl  (norm"));
}
