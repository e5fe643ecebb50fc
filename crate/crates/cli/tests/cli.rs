use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn chbend(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chbend"))
        .current_dir(dir)
        .env_remove("CHBEND_THREADS")
        .args(args)
        .output()
        .expect("spawn chbend")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn build(dir: &Path, out: &str) {
    let o = chbend(dir, &["build", "--ell", "0.5", "--twist", "0", "-o", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

fn bend(dir: &Path, group: &str, eta: &str, out: &str) {
    let o = chbend(dir, &["bend", group, "--eta", eta, "-o", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn build_reports_marked_length() {
    let dir = TempDir::new().unwrap();
    let o = chbend(dir.path(), &["build", "--ell", "0.5", "--twist", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("ell(g_alpha) = "))
        .unwrap()
        .to_string();
    let ell: f64 = line.trim_start_matches("ell(g_alpha) = ").parse().unwrap();
    assert!((ell - 0.5).abs() < 1e-9, "{line}");
    assert!(dir.path().join("group.json").exists());
}

#[test]
fn hnn_builds_in_range_and_fails_cleanly_outside() {
    let dir = TempDir::new().unwrap();
    let o = chbend(
        dir.path(),
        &["build", "--ell", "3", "--hnn", "-o", "h.json"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = chbend(dir.path(), &["build", "--octagon", "--hnn", "-o", "o.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = chbend(
        dir.path(),
        &["build", "--ell", "0.5", "--hnn", "-o", "x.json"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("residual"));
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn repeated_builds_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "a.json");
    build(dir.path(), "b.json");
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reloading_a_group_is_idempotent() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "a.json");
    let o = chbend(dir.path(), &["build", "--config", "a.json", "-o", "b.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn tampered_group_is_rejected() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "g.json");
    let text = std::fs::read_to_string(dir.path().join("g.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let entry = &mut v["generators"][0]["matrix"][0][0];
    *entry = serde_json::json!(entry.as_f64().unwrap() * (1.0 + 1e-4));
    std::fs::write(
        dir.path().join("bad.json"),
        serde_json::to_string_pretty(&v).unwrap(),
    )
    .unwrap();
    let o = chbend(
        dir.path(),
        &["build", "--config", "bad.json", "-o", "x.json"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("residual"), "{}", stderr(&o));
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn zero_bend_keeps_generators() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "g.json");
    bend(dir.path(), "g.json", "0", "b.json");
    let g: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    let b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    let gens = |v: &serde_json::Value| -> Vec<serde_json::Value> {
        let list = v
            .get("generators")
            .or_else(|| v.get("generators_eta"))
            .expect("generator list");
        list.as_array()
            .unwrap()
            .iter()
            .map(|g| g["matrix"].clone())
            .collect()
    };
    assert_eq!(gens(&g), gens(&b));
}

#[test]
fn bend_negative_eta_and_describe_chi() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "g.json");
    let o = chbend(
        dir.path(),
        &["bend", "g.json", "--eta", "-0.3", "-o", "b.json"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("chi(a2) = U(-0.3).a2.U(0.3)"),
        "{}",
        stdout(&o)
    );
    assert!(stdout(&o).contains("chi(a1) = a1"));
}

#[test]
fn verify_bent_group_passes() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "g.json");
    bend(dir.path(), "g.json", "0.3", "b.json");
    let o = chbend(dir.path(), &["verify", "b.json", "--report", "r.json"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("bent group: PASS"));
    assert!(!stdout(&o).contains("FAIL"));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["pass"], serde_json::json!(true));
}

#[test]
fn verify_group_passes() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "g.json");
    let o = chbend(dir.path(), &["verify", "g.json", "--collar-depth", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn collar_for_length() {
    let dir = TempDir::new().unwrap();
    let o = chbend(dir.path(), &["collar", "--ell", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("delta_max = "))
        .unwrap()
        .to_string();
    let d: f64 = line.trim_start_matches("delta_max = ").parse().unwrap();
    let expected = 2.0 * (0.5 / (0.125f64).sinh()).asinh();
    assert!((d - expected).abs() < 1e-9, "{d} vs {expected}");
    assert_eq!(line.split('.').nth(1).unwrap().len(), 9);
}

#[test]
fn collar_rejects_negative_length() {
    let dir = TempDir::new().unwrap();
    let o = chbend(dir.path(), &["collar", "--ell", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("domain"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn collar_checks_a_group() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "g.json");
    let o = chbend(dir.path(), &["collar", "g.json", "--depth", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("collar inequality: PASS"));
}

#[test]
fn limit_set_budget_and_render() {
    let dir = TempDir::new().unwrap();
    build(dir.path(), "g.json");
    bend(dir.path(), "g.json", "0.3", "b.json");
    let o = chbend(
        dir.path(),
        &[
            "limitset",
            "b.json",
            "--depth",
            "8",
            "--max-samples",
            "100",
            "-o",
            "p.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("budget"));
    let csv = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);

    let o = chbend(
        dir.path(),
        &["limitset", "b.json", "--depth", "4", "-o", "q.csv"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = chbend(dir.path(), &["render", "q.csv", "-o", "q.svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("q.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn bad_thread_count_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_chbend"))
        .current_dir(dir.path())
        .env("CHBEND_THREADS", "bad")
        .args(["collar", "--ell", "0.5"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CHBEND_THREADS"));
}

#[test]
fn missing_file_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let o = chbend(dir.path(), &["verify", "nope.json"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
