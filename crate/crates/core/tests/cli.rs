use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn semifix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semifix"))
        .args(args)
        .env_remove("SEMIFIX_SEED")
        .output()
        .expect("binary runs")
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).expect("golden file")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(text.trim().lines().count(), 1, "one error object: {text}");
    serde_json::from_str(text.trim()).expect("stderr is JSON")
}

#[test]
fn golden_phi_cbound() {
    let o = semifix(&["phi", "cbound", "--family", "sum", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("phi_cbound_sum.json"));
    assert_eq!(stdout(&o).trim(), r#"{"value":2.0,"method":"closed_form"}"#);
}

#[test]
fn golden_example_6_6() {
    let o = semifix(&["lab", "example-6-6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("example_6_6.json"));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["fixed_points"], serde_json::json!([]));
    assert_eq!(v["period2"], serde_json::json!(["x", "y"]));
    assert!((v["perimeter_alpha_star"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn golden_solve_banach() {
    let o = semifix(&[
        "solve", "--space", "real_line", "--map", "0.5*x+1", "--family", "banach", "--alpha", "0.5",
        "--x0", "0", "--eps", "1e-6",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("solve_banach.json"));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["termination"], "bound_met");
    let x: f64 = v["point"].as_str().unwrap().parse().unwrap();
    assert!((x - 2.0).abs() <= 1e-6);
}

#[test]
fn not_applicable_prints_ledger() {
    let o = semifix(&[
        "solve", "--space", "squared_line", "--map", "x/2", "--family", "chatterjea", "--beta", "0.3",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "not_applicable");
    let failed: Vec<&str> = e["ledger"]["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"psi_inverse(1/beta) > 1"), "{failed:?}");
}

#[test]
fn invalid_input_exit_codes() {
    let o = semifix(&["solve", "--space", "real_line", "--map", "x++1", "--family", "banach", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "syntax");
    assert_eq!(e["offset"], 2);

    let o = semifix(&["solve", "--space", "hilbert", "--map", "x", "--family", "banach", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "unknown_space");

    let o = semifix(&["phi", "cbound", "--family", "power", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "invalid_parameter");

    let o = semifix(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "usage");
}

#[test]
fn max_iter_is_a_failure() {
    let o = semifix(&[
        "solve", "--space", "real_line", "--map", "0.9*x+1", "--family", "banach", "--alpha", "0.9",
        "--max-iter", "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["termination"], "max_iter");
}

#[test]
fn ultrametric_solve_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = semifix(&[
        "solve", "--space", "string_ultrametric", "--m", "16", "--map", "shift_zero", "--family",
        "banach", "--alpha", "0.5", "--trace", trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["point"], "0000000000000000");
    assert_eq!(v["termination"], "fixed_point_exact");
    let csv = std::fs::read_to_string(trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,step_dist,perimeter,a_priori_bound"));
    assert_eq!(lines.next(), Some("0,1,,1"));
    assert_eq!(lines.next(), Some("1,0.5,,0.5"));
    assert_eq!(csv.lines().count(), 18);
}

#[test]
fn finite_space_commands() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        r#"{"labels":["a","b","c"],"d":[[0,1,2],[1,0,1],[2,1,0]],"phi":{"family":"sum"},"map":[1,1,1]}"#,
    )
    .unwrap();
    let o = semifix(&["validate", "--input", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let o = semifix(&["lab", "classify", "--input", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["fixed_points"], serde_json::json!(["b"]));
    let banach = &v["audit"][0];
    assert_eq!(banach["theorem"], "banach");
    assert_eq!(banach["hypotheses_met"], true);
    assert_eq!(banach["conclusion_met"], true);

    let o = semifix(&["solve", "--input", good.to_str().unwrap(), "--family", "banach", "--alpha", "0.5", "--x0", "c"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(serde_json::from_str::<Value>(&stdout(&o)).unwrap()["point"], "b");

    let squared = dir.path().join("squared.json");
    std::fs::write(
        &squared,
        r#"{"labels":["a","b","c"],"d":[[0,1,4],[1,0,1],[4,1,0]],"phi":{"family":"sum"}}"#,
    )
    .unwrap();
    let o = semifix(&["validate", "--input", squared.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], false);
    assert_eq!(v["triangle"]["worst"]["excess"], 2.0);

    let o = semifix(&["lab", "classify", "--input", squared.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "format");

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"labels":["a"],"d":[[0,1]],"phi":{"family":"sum"}}"#).unwrap();
    let o = semifix(&["validate", "--input", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn audit_seed_from_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_semifix"));
        c.args(["lab", "audit", "--count", "40", "--n-max", "4"]).args(extra);
        match env {
            Some(s) => c.env("SEMIFIX_SEED", s),
            None => c.env_remove("SEMIFIX_SEED"),
        };
        let o = c.output().unwrap();
        assert_eq!(o.status.code(), Some(0));
        serde_json::from_str::<Value>(&stdout(&o)).unwrap()
    };
    assert_eq!(run(None, &[])["seed"], 42);
    assert_eq!(run(Some("7"), &[])["seed"], 7);
    assert_eq!(run(Some("7"), &["--seed", "9"])["seed"], 9);
    let v = run(None, &["--models", "bmetric:3,generic", "--inject-example"]);
    assert_eq!(v["models"], serde_json::json!(["bmetric(3)", "generic"]));
}

#[test]
fn table_format() {
    let o = semifix(&["lab", "example-6-6", "--format", "table"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("perimeter_alpha_star") && l.ends_with("0.666667")));
}
