use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn favard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_favard"))
        .args(args)
        .env_remove("FAVARD_MODEL")
        .env_remove("FAVARD_N")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn favard_level_zero_json() {
    let v = stdout_json(&favard(&["favard", "--model", "fourcorner", "--n", "0", "--format", "json"]));
    let value = v["tables"]["favard"][0]["favard"].as_f64().unwrap();
    assert!((value - 4.0 / PI).abs() < 1e-9);
    assert_eq!(v["schema"], "favard-lab/tables/v1");
}

#[test]
fn report_fits_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = favard(&[
        "report",
        "--model",
        "fourcorner",
        "--n-range",
        "1..6",
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: Value = serde_json::from_str(&text).unwrap();
    assert!(report["fits"]["c_lower"].as_f64().unwrap() > 0.0);

    // c_lower is recomputable from the emitted rows
    let rows = report["rows"].as_array().unwrap();
    let by_hand = rows
        .iter()
        .filter(|r| r["n"].as_u64().unwrap() >= 2)
        .map(|r| {
            let n = r["n"].as_f64().unwrap();
            n * r["favard"].as_f64().unwrap() / n.ln()
        })
        .fold(f64::INFINITY, f64::min);
    assert_eq!(report["fits"]["c_lower"].as_f64().unwrap(), by_hand);

    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.v1.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn usage_errors_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out");
    let t = target.to_str().unwrap();
    for args in [
        vec!["favard", "--n", "1", "--bogus", "--out", t],
        vec!["favard", "--n", "1", "--n-range", "1..2", "--out", t],
        vec!["favard", "--n", "1", "--nodes", "1", "--out", t],
        vec!["favard", "--model", "hexagon", "--out", t],
        vec!["teleport", "--out", t],
    ] {
        let out = favard(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!target.exists(), "{args:?}");
    }
    assert_eq!(favard(&["--help"]).status.code(), Some(0));
}

#[test]
fn budget_and_convergence_exit_codes() {
    assert_eq!(favard(&["favard", "--n", "13"]).status.code(), Some(2));
    assert_eq!(favard(&["pairs", "--n", "9"]).status.code(), Some(2));
    let out = favard(&["favard", "--n", "5", "--panels", "4", "--max-doublings", "1", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(favard(&["pairs", "--model", "sierpinski", "--n", "2"]).status.code(), Some(1));
}

#[test]
fn csv_uses_seventeen_digits() {
    let out = favard(&["energy", "--n", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').take(4).collect::<Vec<_>>(), ["model", "n", "energy", "energy_over_n"]);
    let energy = lines.next().unwrap().split(',').nth(2).unwrap().to_string();
    assert_eq!(energy, "9.0236892706218252e-1");
    let exact = 2.0 / 3.0 + 2f64.sqrt() / 6.0;
    assert!((energy.parse::<f64>().unwrap() - exact).abs() < 1e-15);
}

#[test]
fn environment_overrides() {
    let out = Command::new(env!("CARGO_BIN_EXE_favard"))
        .args(["favard", "--format", "json"])
        .env("FAVARD_MODEL", "sierpinski")
        .env("FAVARD_N", "0")
        .output()
        .unwrap();
    let v = stdout_json(&out);
    let value = v["tables"]["favard"][0]["favard"].as_f64().unwrap();
    assert!((value - 3.0 / PI).abs() < 1e-6);
    assert_eq!(v["tables"]["favard"][0]["model"], "sierpinski");
}

fn run_to_dir(args: &[&str], threads: &str) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let mut full: Vec<&str> = args.to_vec();
    let d = dir.path().to_str().unwrap().to_string();
    full.extend(["--threads", threads, "--out", &d]);
    let out = favard(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    for args in [
        vec!["report", "--n-range", "1..4", "--format", "json"],
        vec!["pairs", "--n-range", "2..4", "--samples", "8"],
        vec!["needle", "--n", "3", "--trials", "50000", "--seed", "7"],
        vec!["random", "--n", "3", "--seeds", "3"],
        vec!["energy", "--model", "sierpinski", "--n-range", "1..4"],
        vec!["profile", "--n", "3", "--grid", "64"],
    ] {
        let one = run_to_dir(&args, "1");
        let four = run_to_dir(&args, "4");
        assert!(!one.is_empty());
        assert_eq!(one, four, "{args:?}");
    }
}
