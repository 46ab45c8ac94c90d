//! End-to-end checks of the command-line surface: stable JSON output,
//! error codes on the documented exit classes, and round-tripping of
//! emitted descriptors back through the parser.

use serde_json::Value;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maclane"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a single JSON document")
}

#[test]
fn value_command_matches_documented_example() {
    let out = run(&[
        "value",
        "--p",
        "2",
        "--val",
        r#"[["x",1,"1/2"]]"#,
        "--poly",
        "x^3+2x+4",
    ]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["format"], 1);
    assert_eq!(doc["value"], "3/2");
}

#[test]
fn extensions_command_reports_leaves_and_audit() {
    let out = run(&["extensions", "--p", "5", "--poly", "x^2+1"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    let leaves = doc["leaves"].as_array().unwrap();
    assert_eq!(leaves.len(), 2);
    for l in leaves {
        assert_eq!(l["e"], 1);
        assert_eq!(l["f"], 1);
    }
    assert_eq!(doc["check"]["sum_ef"], 2);
    assert_eq!(doc["check"]["deg"], 2);
}

#[test]
fn non_prime_p_is_a_validation_error() {
    let out = run(&["value", "--p", "4", "--val", r#"[["x","1"]]"#, "--poly", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = stdout_json(&out);
    assert_eq!(doc["error"]["code"], "NON_PRIME");
    assert_eq!(doc["error"]["field"], "p");
}

#[test]
fn precondition_violations_exit_3() {
    // raising to the current value is not a strict raise
    let out = run(&[
        "augment",
        "--p",
        "2",
        "--val",
        r#"[["x","1"]]"#,
        "--phi",
        "x^2+2x+4",
        "--mu",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let doc = stdout_json(&out);
    assert_eq!(doc["error"]["code"], "MU_NOT_ABOVE");

    let out = run(&[
        "separate",
        "--p",
        "2",
        "--val",
        r#"[["x","1"]]"#,
        "--val",
        r#"[["x","1"]]"#,
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&["extensions", "--p", "2", "--poly", "x^2+2x+1"]);
    assert_eq!(out.status.code(), Some(3));
    let doc = stdout_json(&out);
    assert_eq!(doc["error"]["code"], "NOT_SQUAREFREE");
}

#[test]
fn strict_mu_rejects_the_gauss_stage() {
    let out = run(&[
        "value",
        "--p",
        "2",
        "--strict-mu",
        "--val",
        r#"[["x","0"]]"#,
        "--poly",
        "x",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let doc = stdout_json(&out);
    assert_eq!(doc["error"]["code"], "STRICT_MU");
    // without the flag the Gauss valuation is accepted
    let out = run(&["value", "--p", "2", "--val", r#"[["x","0"]]"#, "--poly", "x"]);
    assert!(out.status.success());
}

#[test]
fn augment_output_round_trips_into_value() {
    let out = run(&[
        "augment",
        "--p",
        "2",
        "--val",
        r#"[["x","1"]]"#,
        "--phi",
        "x^2+2x+4",
        "--mu",
        "3",
    ]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    let descriptor = serde_json::to_string(&doc["valuation"]).unwrap();
    let out = run(&["value", "--val", &descriptor, "--poly", "x^2+2x+4"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["value"], "3");
    // the embedded base is used; values match the two-stage rule
    let out = run(&["value", "--val", &descriptor, "--poly", "x^4+4x^3+12x^2+16x+24"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["value"], "3");
}

#[test]
fn keylift_round_trips_through_residual() {
    let out = run(&["keylift", "--p", "2", "--val", r#"[["x","1"]]"#, "--psi", "[1,1,1]"]);
    assert!(out.status.success());
    let phi = stdout_json(&out)["phi"].clone();
    let phi_text = serde_json::to_string(&phi).unwrap();
    let out = run(&["residual", "--p", "2", "--val", r#"[["x","1"]]"#, "--poly", &phi_text]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["residual"]["key_order"], 0);
    assert_eq!(doc["residual"]["poly"], serde_json::json!([1, 1, 1]));
}

#[test]
fn selftest_reports_all_suites() {
    let out = run(&["selftest", "--suite", "all", "--seed", "7", "--samples", "15"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["ok"], true);
    assert_eq!(doc["reports"].as_array().unwrap().len(), 6);

    let out = run(&["selftest", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trace_goes_to_stderr_only() {
    let out = run(&[
        "value",
        "--p",
        "2",
        "--trace",
        "--val",
        r#"[["x","1"]]"#,
        "--poly",
        "x^2+2x+4",
    ]);
    assert!(out.status.success());
    let _ = stdout_json(&out); // stdout stays a single JSON document
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("expansion"), "trace missing: {err}");
}

#[test]
fn approximate_reconstructs_descriptor() {
    let descriptor = r#"{"base":{"p":2,"d":1},"stages":[{"phi":["0","1"],"mu":"1"},{"phi":["4","2","1"],"mu":"3"}]}"#;
    let out = run(&["approximate", "--val", descriptor]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["status"], "exact");
    assert_eq!(doc["valuation"]["stages"].as_array().unwrap().len(), 2);
}
