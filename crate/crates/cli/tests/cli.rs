use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_privaudit"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().expect("binary runs");
    (
        status.code().expect("exit code"),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn constant_mechanism_has_no_leakage() {
    let (code, out, _) = run(bin().arg("audit").arg(scenario("constant.json")));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["r_dp"], "1/1");
    assert_eq!(v["report"]["r_bdp"], "1/1");
    assert_eq!(v["report"]["r_mp"], "1/1");
    assert_eq!(v["report"]["bsp_lower"], "0/1");
}

#[test]
fn randomized_response_audit_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let (code, stdout, _) = run(bin()
        .arg("audit")
        .arg(scenario("randomized_response.json"))
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["r_dp"], "3/1");
    assert_eq!(v["report"]["r_bdp"], "3/1");
    assert_eq!(v["report"]["sp_twopoint"], "1/4");
    assert_eq!(v["schema_version"], 1);

    let (code, _, err) = run(bin()
        .arg("audit")
        .arg(scenario("randomized_response.json"))
        .arg("--verify-report")
        .arg(&out));
    assert_eq!(code, 0, "{err}");
}

#[test]
fn tampered_report_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let (code, _, _) = run(bin()
        .arg("audit")
        .arg(scenario("randomized_response.json"))
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["report"]["r_bdp"] = "2/1".into();
    let bad = write(dir.path(), "bad.json", &serde_json::to_string(&v).unwrap());
    let (code, _, err) = run(bin()
        .arg("audit")
        .arg(scenario("randomized_response.json"))
        .arg("--verify-report")
        .arg(&bad));
    assert_eq!(code, 1);
    assert!(err.contains("verify:"), "{err}");
}

#[test]
fn identity_mechanism_reports_infinite_ratio() {
    let (code, out, _) = run(bin().arg("audit").arg(scenario("identity.json")));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["r_dp"], "inf");
    assert_eq!(v["report"]["bsp_twopoint"], "1/2");
}

#[test]
fn malformed_kernel_row_is_rejected_with_its_database() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "bad.json",
        r#"{
  "domain": {"values": ["0", "1", "⊥"], "default": "⊥"},
  "n": 1,
  "mechanism": {"kind": "table", "outputs": ["a", "b"], "rows": [
    {"database": ["0"], "probs": ["1/2", "1/2"]},
    {"database": ["1"], "probs": ["1/2", "1/3"]},
    {"database": ["⊥"], "probs": ["1", "0"]}
  ]},
  "prior": {"kind": "uniform"}
}"#,
    );
    let (code, out, err) = run(bin().arg("audit").arg(&path));
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("(1)") && err.contains("5/6"), "{err}");
}

#[test]
fn unknown_field_names_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "typo.json",
        r#"{"domain": {"values": ["0", "⊥"], "default": "⊥"}, "n": 1,
            "mechanism": {"kind": "identity"}, "prior": {"kind": "uniform"},
            "beliefs": {"randmo": 3}}"#,
    );
    let (code, _, err) = run(bin().arg("audit").arg(&path));
    assert_eq!(code, 2);
    assert!(err.contains("beliefs"), "{err}");
}

#[test]
fn missing_scenario_is_invalid_input() {
    let (code, _, err) = run(bin().arg("audit").arg("/nonexistent/scenario.json"));
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn small_fuzz_run_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(bin()
        .args([
            "--threads",
            "2",
            "fuzz",
            "--seed",
            "5",
            "--trials",
            "12",
            "--max-n",
            "2",
            "--beliefs",
            "5",
        ])
        .arg("--repro-dir")
        .arg(dir.path().join("repro")));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["trials"], 12);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
    assert!(!dir.path().join("repro").exists());
}

#[test]
fn bounds_csv_has_header_and_full_grid() {
    let (code, out, _) = run(bin().arg("bounds"));
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("eps,new_bound,old_bound,improved"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 135);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn bounds_json_format() {
    let (code, out, _) = run(bin().args([
        "bounds",
        "--eps-min",
        "0.5",
        "--eps-max",
        "0.6",
        "--step",
        "0.05",
        "--format",
        "json",
    ]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn invalid_bounds_range_exits_two() {
    let (code, _, err) = run(bin().args(["bounds", "--eps-min", "1", "--eps-max", "0.5"]));
    assert_eq!(code, 2);
    assert!(err.contains("invalid range"), "{err}");
    let (code, _, _) = run(bin().args(["bounds", "--step", "0"]));
    assert_eq!(code, 2);
}

#[test]
fn unknown_subcommand_exits_two() {
    let (code, _, _) = run(bin().arg("frobnicate"));
    assert_eq!(code, 2);
}
