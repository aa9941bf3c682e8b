//! End-to-end runs of the binary on the fixture set.

use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskmdp")).args(args).output().unwrap()
}

/// Runs with `--format json` and returns the exit code and parsed report.
fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = run(&all);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn state_value<'a>(report: &'a Value, state: &str) -> &'a str {
    report["result"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["state"] == state)
        .unwrap()["value"]
        .as_str()
        .unwrap()
}

fn condition<'a>(report: &'a Value, id: &str) -> &'a Value {
    report["result"]["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == id)
        .unwrap_or_else(|| panic!("{id} missing"))
}

#[test]
fn validate_exit_codes() {
    let ok = run(&["validate", &fixture("fig1a")]);
    assert_eq!(ok.status.code(), Some(0));

    let bad = run(&["validate", &fixture("bad_mass")]);
    assert_eq!(bad.status.code(), Some(1));
    let err = stderr(&bad);
    assert_eq!(err.lines().filter(|l| l.starts_with("diagnostic:")).count(), 1, "{err}");

    let missing = run(&["validate", "/nonexistent/model.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("cannot read"));
}

#[test]
fn eval_examples() {
    let (code, r) = json(&["eval", &fixture("fig3a"), &fixture("only"), &fixture("exp_two"), "--horizon", "2"]);
    assert_eq!(code, 0);
    assert_eq!(state_value(&r, "s1"), "2");

    let (code, r) = json(&["eval", &fixture("fig1a"), &fixture("fig1a_pi1"), &fixture("exp_half"), "--infinite"]);
    assert_eq!(code, 0);
    assert_eq!(state_value(&r, "s1"), "-inf");
    assert_eq!(state_value(&r, "s2"), "-1");

    let (code, r) = json(&["eval", &fixture("fig1b"), &fixture("only"), &fixture("linear"), "--infinite"]);
    assert_eq!(code, 0);
    assert_eq!(state_value(&r, "s1"), "nonexistent(oscillation)");
}

#[test]
fn eval_errors_map_to_exit_codes() {
    // (T+1) trajectories of length T exceed the enumeration budget: engine error
    let out = run(&[
        "eval",
        &fixture("fig1a"),
        &fixture("fig1a_pi1"),
        &fixture("linear"),
        "--horizon",
        "5000",
        "--method",
        "enumerate",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    // the probe needs an infinite horizon
    let out = run(&[
        "eval",
        &fixture("fig1a"),
        &fixture("fig1a_pi1"),
        &fixture("linear"),
        "--horizon",
        "3",
        "--method",
        "probe",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn conditions_examples() {
    let (code, r) = json(&["conditions", &fixture("fig1b"), &fixture("linear")]);
    assert_eq!(code, 0);
    let c5 = condition(&r, "C5");
    assert_eq!(c5["status"], "violated");
    let values: Vec<&str> = c5["witness"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["value"].as_str().unwrap())
        .collect();
    assert_eq!(values, ["+inf", "-inf"]);
    assert!(c5["quantifier_note"].as_str().unwrap().contains("stationary deterministic"));

    let (_, r) = json(&["conditions", &fixture("fig3a"), &fixture("exp_two"), "--ids", "C10"]);
    assert_eq!(r["result"]["conditions"].as_array().unwrap().len(), 1);
    assert_eq!(condition(&r, "C10")["status"], "violated");

    let (_, r) = json(&["conditions", &fixture("fig1a"), &fixture("linear")]);
    assert_eq!(condition(&r, "C3")["status"], "holds");
    assert_eq!(condition(&r, "C4")["status"], "holds");

    // exponential-only condition with a linear utility
    let (code, _) = json(&["conditions", &fixture("fig1a"), &fixture("linear"), "--ids", "C10"]);
    assert_eq!(code, 4);
}

#[test]
fn analyze_examples() {
    let (code, r) = json(&["analyze", &fixture("fig1a"), &fixture("exp_half")]);
    assert_eq!(code, 0);
    let res = &r["result"];
    assert_eq!(res["values_exist"]["level"], "all-policies");
    assert_eq!(res["optimal_values_finite"]["level"], "not-guaranteed");
    let cites = res["optimal_values_finite"]["citations"].to_string();
    assert!(cites.contains("C9"), "{cites}");

    let (_, r) = json(&["analyze", &fixture("fig1a"), &fixture("bounded")]);
    let t2 = &r["result"]["table2"];
    assert_eq!(t2["cell"], "✓?");
    assert!(t2["citation"].as_str().unwrap().contains("Theorem 14"));

    let (_, r) = json(&["analyze", &fixture("fig1c"), &fixture("linear")]);
    let res = &r["result"];
    assert_eq!(condition(&r, "C5")["status"], "violated");
    assert_eq!(res["values_exist"]["level"], "numeric-only");
    assert!(res["notes"].to_string().contains("not necessary"));
}

#[test]
fn text_verdicts_carry_citations() {
    let out = run(&["analyze", &fixture("fig1a"), &fixture("exp_half")]);
    let text = String::from_utf8(out.stdout).unwrap();
    let verdicts: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("values exist") || l.starts_with("optimal values"))
        .collect();
    assert_eq!(verdicts.len(), 3);
    for line in verdicts {
        assert!(line.contains('[') && !line.contains("no applicable result"), "{line}");
    }
    assert!(text.lines().last().unwrap().starts_with("timing: "));
}

#[test]
fn solve_examples() {
    let (code, r) = json(&["solve", &fixture("fig1a"), "--gamma", "0.75"]);
    assert_eq!(code, 0);
    let s1 = &r["result"]["policy"][0];
    assert_eq!(s1["action"], "top");
    let v: f64 = s1["value"].as_str().unwrap().parse().unwrap();
    assert!((v + 2.0).abs() < 1e-8, "{v}");

    let (code, r) = json(&["solve", &fixture("all_zero"), "--gamma", "3"]);
    assert_eq!(code, 0);
    for p in r["result"]["policy"].as_array().unwrap() {
        assert_eq!(p["value"], "1");
    }

    let out = run(&["solve", &fixture("fig1a"), "--gamma", "0.5"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("C9"));
}

#[test]
fn simulate_examples() {
    let (code, r) = json(&[
        "simulate",
        &fixture("fig3a"),
        &fixture("only"),
        &fixture("exp_two"),
        "--horizon",
        "2",
        "--samples",
        "100000",
        "--seed",
        "7",
    ]);
    assert_eq!(code, 0);
    let mean: f64 = r["result"]["mean"].as_str().unwrap().parse().unwrap();
    assert!((mean - 2.0).abs() < 0.05, "{mean}");
    assert_eq!(r["result"]["agrees"], true);
    assert_eq!(r["result"]["exact"], "2");

    let (_, r) = json(&[
        "simulate",
        &fixture("chain"),
        &fixture("only"),
        &fixture("linear"),
        "--horizon",
        "5",
        "--samples",
        "100",
    ]);
    assert_eq!(r["result"]["stderr"], "0");

    let (_, r) = json(&[
        "simulate",
        &fixture("fig1a"),
        &fixture("fig1a_pi1"),
        &fixture("exp_three_quarters"),
        "--start",
        "s1",
        "--horizon",
        "60",
        "--samples",
        "100000",
    ]);
    let mean: f64 = r["result"]["mean"].as_str().unwrap().parse().unwrap();
    assert!((mean + 2.0).abs() < 0.05, "{mean}");
    assert_eq!(r["result"]["agrees"], true);
}

#[test]
fn reports_are_reproducible() {
    let args = ["analyze", &fixture("fig3a"), &fixture("exp_two"), "--format", "json"];
    let strip = |o: Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        let digest = v["inputs"][0]["sha256"].as_str().unwrap().to_string();
        assert_eq!(digest.len(), 64);
        v.as_object_mut().unwrap().remove("timing_ms");
        v.to_string()
    };
    assert_eq!(strip(run(&args)), strip(run(&args)));
}
