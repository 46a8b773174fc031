//! The `ria` binary as a subprocess.

use std::process::{Command, Output};

use serde_json::Value;

fn ria(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ria"))
        .args(args)
        .env_remove("RIA_SEED")
        .output()
        .expect("run ria")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn theory_reports_exact_values() {
    let out = ria(&["theory", "--k", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let ds = &v["theory"]["breakdown"]["ds"];
    assert_eq!(
        (ds["num"].as_str(), ds["den"].as_str()),
        (Some("120"), Some("67"))
    );
    assert_eq!(v["theory"]["breakdown"]["n_star"], 3);
    assert_eq!(v["theory"]["limit"]["num"], "64");
    let schemes: Vec<&str> = v["theory"]["comparators"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["scheme"].as_str().unwrap())
        .collect();
    assert_eq!(schemes[0], "proposed");
}

#[test]
fn plan_defaults_to_optimal_n() {
    let v = json(&ria(&["plan", "--k", "4"]));
    assert_eq!(v["parameters"]["n"], 3);
    assert_eq!(v["plan"]["plan"]["total_slots"], 65);
    assert_eq!(v["plan"]["plan"]["total_symbols"], 108);
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        &[
            "simulate", "--k", "3", "--n", "3", "--trials", "5", "--seed", "42",
        ][..],
        &["sweep", "--k", "30"][..],
        &["plan", "--k", "5", "--format", "csv"][..],
    ] {
        let a = ria(args);
        let b = ria(args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seed_from_environment() {
    let args = ["simulate", "--k", "3", "--trials", "2"];
    let with_env = Command::new(env!("CARGO_BIN_EXE_ria"))
        .args(args)
        .env("RIA_SEED", "17")
        .output()
        .unwrap();
    let explicit = ria(&["simulate", "--k", "3", "--trials", "2", "--seed", "17"]);
    let default = ria(&args);
    assert_eq!(with_env.stdout, explicit.stdout);
    assert_ne!(with_env.stdout, default.stdout);
    assert_eq!(json(&with_env)["parameters"]["seed"], 17);
    assert_eq!(json(&default)["parameters"]["seed"], 0);
}

#[test]
fn sweep_csv() {
    let out = ria(&["sweep", "--k", "6", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "k");
    let ds_num = headers.iter().position(|h| h == "ds_num").unwrap();
    let ds_den = headers.iter().position(|h| h == "ds_den").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!((&rows[2][ds_num], &rows[2][ds_den]), ("108", "65"));
}

#[test]
fn out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.json");
    let out = ria(&[
        "plan",
        "--k",
        "3",
        "--n",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["plan"]["plan"]["total_slots"], 16);

    let bad = dir.path().join("missing").join("x.json");
    let out = ria(&["plan", "--k", "3", "--out", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(ria(&["--help"]).status.code(), Some(0));
    assert_eq!(ria(&["--version"]).status.code(), Some(0));
    assert_eq!(ria(&["theory", "--k", "1"]).status.code(), Some(2));
    assert_eq!(
        ria(&["theory", "--k", "3", "--n", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ria(&["simulate", "--k", "4", "--antennas", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ria(&["simulate", "--k", "3", "--tol", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(ria(&["plan", "--k", "abc"]).status.code(), Some(2));
    assert_eq!(ria(&["nope"]).status.code(), Some(2));
    let out = ria(&["theory", "--k", "1"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
}

#[test]
fn simulate_summary_fields() {
    let v = json(&ria(&[
        "simulate", "--k", "4", "--trials", "2", "--seed", "3",
    ]));
    let s = &v["simulation"];
    assert_eq!(s["passed"], 2);
    assert_eq!(s["csit_violations"], 0);
    assert_eq!(s["measured_dof"]["num"], "108");
    assert_eq!(s["measured_dof"]["den"], "65");
    assert!(s["max_relative_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(s["outcomes"].as_array().unwrap().len(), 2);
}
