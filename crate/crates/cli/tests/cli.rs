use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn grushin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn distance_on_the_vertical_axis_is_two_pi() {
    let v = json(&grushin(&["distance", "--n", "1", "--np", "1", "--x", "0", "--xp", "0", "--u", "0", "--up", "1"]));
    let d2 = v["d2"].as_f64().unwrap();
    assert!((d2 / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-12, "{d2}");
}

#[test]
fn kernel_at_origin_is_one_over_32() {
    let v = json(&grushin(&["kernel", "--n", "2", "--np", "1", "--zero", "--h", "1"]));
    let p = v["value"].as_f64().unwrap();
    assert!((p * 32.0 - 1.0).abs() < 1e-10, "{p}");
}

#[test]
fn negative_components_parse() {
    let v = json(&grushin(&["distance", "--x=-0.5", "--xp", "0.5", "--u=-1", "--up", "1"]));
    assert!(v["d2"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = grushin(&["sweep", "--config", "definitely-missing.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(grushin(&["kernel", "--bogus"]).status.code(), Some(1));
}

#[test]
fn wrong_vector_length_is_a_usage_error() {
    assert_eq!(grushin(&["kernel", "--n", "2", "--x", "1"]).status.code(), Some(1));
}

#[test]
fn failed_precondition_exits_two() {
    // The PDE oracle only handles n = n' = 1.
    let out = grushin(&["oracle", "--kind", "pde", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"grid": {"points": {"pairs": [], "h": [1.0]}}}"#);
    assert_eq!(grushin(&["sweep", "--config", &cfg]).status.code(), Some(1));
}

const SWEEP: &str = r#"{
  "grid": { "invariants": { "n": [1, 2], "np": [1], "eps": [0.5, 2.0], "a": [0.0], "d": [2.0, 4.0], "h": [1.0] } },
  "methods": ["direct", "transformed"],
  "tol": 1e-9,
  "envelope": true
}"#;

#[test]
fn sweep_is_deterministic_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, threads) in [(&a, "1"), (&b, "3")] {
        let out = Command::new(env!("CARGO_BIN_EXE_grushin"))
            .args(["sweep", "--config", &cfg, "--out", p.to_str().unwrap()])
            .env("GRUSHIN_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("# grushin-sweep v1\n"));
    assert!(!text.contains("NaN"));

    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rd.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    // The printed command reproduces the row's value.
    let row = &rows[3];
    assert_eq!(&row[col("status")], "ok");
    let cmd: Vec<&str> = row[col("command")].split_whitespace().skip(1).collect();
    let v = json(&grushin(&cmd));
    let want: f64 = row[col("value")].parse().unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), want);

    // A four-point grid is too coarse for the slope check; only the exit
    // code has to agree with the verdict.
    let rep = grushin(&["report", a.to_str().unwrap()]);
    let r: Value = serde_json::from_slice(&rep.stdout).unwrap();
    let pass = r["pass"].as_bool().unwrap();
    assert_eq!(rep.status.code(), Some(if pass { 0 } else { 2 }));
    assert_eq!(r["checks"][0]["pass"], true);
    assert_eq!(r["rows"].as_u64(), Some(8));
    assert_eq!(r["comparisons"][0]["method"], "direct");
    assert_eq!(r["comparisons"][0]["ref_method"], "transformed");
    assert!(r["comparisons"][0]["max_rel_dev"].as_f64().unwrap() < 1e-6);
    assert!(r["envelope"]["fitted_constant"].as_f64().unwrap() >= 1.0);
}

#[test]
fn skipped_rows_carry_a_status() {
    let dir = tempfile::tempdir().unwrap();
    // eps = 4 is outside (0, pi]; the row is reported, not fatal.
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"grid": {"invariants": {"n": [1], "np": [1], "eps": [1.0, 4.0], "a": [0.0], "d": [1.0], "h": [1.0]}}}"#,
    );
    let out = grushin(&["sweep", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let statuses: Vec<String> = rd.records().map(|r| r.unwrap()[14].to_string()).collect();
    assert_eq!(statuses, ["ok", "error"]);
}

#[test]
fn report_rejects_unversioned_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x.csv", "row,n\n0,1\n");
    assert_eq!(grushin(&["report", &p]).status.code(), Some(1));
}
