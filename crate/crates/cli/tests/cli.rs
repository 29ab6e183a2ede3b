use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matfix"))
        .args(args)
        .env_remove("MATFIX_SEED")
        .output()
        .expect("binary runs")
}

fn structured(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--format");
    all.push("structured");
    let out = run(&all);
    let doc: Value = serde_json::from_slice(&out.stdout).expect("structured output is JSON");
    (out.status.code().unwrap(), doc)
}

#[test]
fn scalar_instance_solves_to_two() {
    let (code, doc) = structured(&["solve", &fixture("scalar.json"), "--tol", "1e-13"]);
    assert_eq!(code, 0);
    let x = doc["report"]["solve"]["x"]["re"][0][0].as_f64().unwrap();
    assert!((x - 2.0).abs() < 1e-12, "{x}");
    assert_eq!(doc["report"]["membership"]["scalar"], true);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["exit_code"], 0);
}

#[test]
fn example1_from_scaled_identity() {
    let (code, doc) = structured(&["solve", &fixture("example1.json"), "--x0", "scale:1.1"]);
    assert_eq!(code, 0);
    let s = &doc["report"]["solve"];
    assert_eq!(s["iterations"], 11);
    assert!(s["residual_norm"].as_f64().unwrap() < 1e-10);
    assert_eq!(doc["settings"]["solve"]["x0"], "scale:1.1");
    for key in ["coarse", "refined", "scalar"] {
        assert_eq!(doc["report"]["membership"][key], true, "{key}");
    }
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code().unwrap();
    assert_eq!(code(&["solve", &fixture("indefinite.json")]), 1);
    assert_eq!(code(&["solve", "/nonexistent/input.json"]), 1);
    assert_eq!(
        code(&["analyze", &fixture("example2.json"), &fixture("mismatched_delta.json")]),
        1
    );
    assert_eq!(code(&["solve", &fixture("example1.json"), "--max-iter", "3"]), 2);
    assert_eq!(code(&["backward", &fixture("example2.json"), &fixture("poor_approx.json")]), 3);
    assert_eq!(code(&["solve", &fixture("example1.json"), "--x0", "bogus"]), 1);
}

#[test]
fn parse_errors_name_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"n\": 2,\n  \"m\": 1,\n  \"Q\": oops\n}").unwrap();
    let out = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn zero_perturbation_gives_zero_bounds() {
    let (code, doc) = structured(&["analyze", &fixture("example2.json"), &fixture("zero_delta.json")]);
    assert_eq!(code, 0);
    for entry in doc["report"]["bounds"].as_array().unwrap() {
        assert_eq!(entry["report"]["relative_bound"].as_f64(), Some(0.0), "{entry}");
    }
    assert_eq!(doc["report"]["first_order"]["norm"].as_f64(), Some(0.0));
}

#[test]
fn analyze_orders_the_bounds() {
    let (code, doc) = structured(&["analyze", &fixture("example2.json"), &fixture("example2_delta_j7.json")]);
    assert_eq!(code, 0);
    let rel: Vec<f64> = doc["report"]["bounds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["report"]["relative_bound"].as_f64().unwrap())
        .collect();
    assert!(rel[2] < rel[1] && rel[1] < rel[0], "{rel:?}");
    let first = doc["report"]["first_order"]["norm"].as_f64().unwrap();
    let abs3 = doc["report"]["bounds"][2]["report"]["absolute_bound"].as_f64().unwrap();
    assert!(first <= abs3 * (1.0 + 1e-9), "{first} {abs3}");
}

#[test]
fn fixtures_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["write-fixtures", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    for name in ["example1.json", "example2.json", "example3.json", "example4_k1.json", "example2_delta_j7.json"] {
        let fresh: Value = serde_json::from_slice(&std::fs::read(dir.path().join(name)).unwrap()).unwrap();
        let shipped: Value = serde_json::from_slice(&std::fs::read(fixture(name)).unwrap()).unwrap();
        assert_eq!(fresh, shipped, "{name}");
    }
}

#[test]
fn reproduce_text_is_deterministic() {
    let a = run(&["reproduce", "2", "--seed", "5"]);
    let b = run(&["reproduce", "2", "--seed", "5", "--sequential"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_matfix"))
        .args(["reproduce", "2"])
        .env("MATFIX_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn reproduce_rejects_unknown_example() {
    assert_eq!(run(&["reproduce", "5"]).status.code(), Some(2));
}

#[test]
fn oracle_estimate_stays_below_condition_number() {
    let (code, doc) = structured(&[
        "cond",
        &fixture("example2.json"),
        "--tol",
        "1e-13",
        "--oracle-trials",
        "10",
    ]);
    assert_eq!(code, 0);
    let c = doc["report"]["condition"]["value"].as_f64().unwrap();
    let est = doc["report"]["oracle"]["estimate"].as_f64().unwrap();
    assert!(est > 0.0 && est <= c * 1.001, "{est} {c}");
}

#[test]
fn nonhermitian_mode_accepts_raw_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("raw.json");
    std::fs::write(
        &path,
        r#"{"n": 2, "m": 1, "Q": {"re": [[2.0, 0.3], [0.0, 2.0]]}, "A": [{"re": [[0.2, 0.1], [0.0, 0.3]]}]}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["solve", p]).status.code(), Some(1));
    let (code, doc) = structured(&["solve", p, "--allow-nonhermitian"]);
    assert_eq!(code, 0);
    assert!(doc["report"]["solve"]["residual_norm"].as_f64().unwrap() < 1e-10);
    assert!(doc["report"].get("membership").is_none());
}
