use std::fs;
use std::process::Command;

use serde_json::Value;

fn snzlab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_snzlab"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn measure_with_p_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    fs::write(&p, r#"{"p": ["1", "-10", "100"]}"#).unwrap();
    let p = p.to_str().unwrap();
    assert_eq!(snzlab(&["measure", "FULL", "--p", p]).1, "1\n");
    assert_eq!(snzlab(&["measure", "EMPTY", "--p", p]).1, "0\n");
    let expr = dir.path().join("u.txt");
    fs::write(&expr, "H({}, {3}) |\n H({3,4}, {})").unwrap();
    let (code, out, _) = snzlab(&["measure", "--expr-file", expr.to_str().unwrap(), "--p", p, "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    // h(0,1) + h(2,0) = 11 + 100
    assert_eq!(v["charge"], "111");
    assert_eq!(v["schema"], "snzlab/1");
}

#[test]
fn measure_reports_syntax_errors() {
    let (code, _, err) = snzlab(&["measure", "H({1},{2}", "--p", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("1:10"), "{err}");
}

#[test]
fn verify_exit_codes() {
    let (code, out, _) = snzlab(&["verify-snz", "--p", "1,1", "--t-max", "1"]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["counterexample"]["t"], 1);
    assert_eq!(v["counterexample"]["w"], serde_json::json!(["1", "0"]));
    assert_eq!(snzlab(&["verify-snz", "--p", "1,-1,2", "--t-max", "2"]).0, 0);
    assert_eq!(
        snzlab(&["verify-snz", "--p", "1,-1,2", "--t-max", "2", "--budget-ms", "0"]).0,
        3
    );
    assert_eq!(snzlab(&["verify-snz", "--p", "1,-1", "--t-max", "2"]).0, 2);
    assert_eq!(
        snzlab(&["verify-snz", "--p", "1", "--t-max", "0", "--strategy", "magic"]).0,
        2
    );
}

#[test]
fn deterministic_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.json");
    let (code, _, _) = snzlab(&[
        "gen-pseq", "--greedy", "--t-horizon", "5", "--deterministic", "--out", p.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let p = p.to_str().unwrap();
    let runs: Vec<String> = ["1", "2", "4"]
        .iter()
        .map(|j| {
            snzlab(&["verify-snz", "--p", p, "--t-max", "5", "--jobs", j, "--deterministic"]).1
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
    let mitm = snzlab(&[
        "verify-snz", "--p", "2,2,1,5", "--t-max", "3", "--strategy", "mitm", "--deterministic",
    ]);
    let ex = snzlab(&["verify-snz", "--p", "2,2,1,5", "--t-max", "3", "--deterministic"]);
    let strip = |s: &str| s.replace("meet-in-the-middle", "exhaustive");
    assert_eq!(strip(&mitm.1), ex.1);
}

#[test]
fn gen_pseq_provenance() {
    let (code, out, _) = snzlab(&["gen-pseq", "--greedy", "--t-horizon", "3"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["p"], serde_json::json!(["1", "-1", "2", "-3"]));
    assert_eq!(v["provenance"]["horizon"], 3);
    assert_eq!(snzlab(&["gen-pseq", "--t-horizon", "3"]).0, 2);
}

#[test]
fn growth_and_lemmas() {
    let (code, out, _) = snzlab(&["check-growth", "--p", "1,5", "--g", "paper"]);
    assert_eq!(code, 1);
    assert!(out.contains("not materializable: requires ~1e20 bits"));
    let (code, out, _) = snzlab(&["check-lemmas", "--t", "2"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["reports"][0]["check"], "dual-basis");
    assert_eq!(v["reports"][0]["verdict"], "pass");
    let (_, out, _) = snzlab(&["check-lemmas", "--t", "100", "--s", "2"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let det = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["check"] == "q-det-lower-bound")
        .unwrap();
    assert_eq!(det["verdict"], "pass");
}

#[test]
fn demos() {
    let (code, out, _) = snzlab(&["demo-evens", "--e", "3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("mu(E) = 3 forces mu(E \\ {2, 4, ..., 6})"));
    let (code, out, _) = snzlab(&["demo-obstruction", "--a", "2", "--values", "5,8,13"]);
    assert_eq!(code, 0);
    assert!(out.contains("mu(F \\ G) = 8 - 8 = 0"));
    let (code, out, _) = snzlab(&["demo-obstruction", "--a", "-1", "--values", "4,1"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"orientation\": \"inside\""), "{out}");
    assert_eq!(snzlab(&["demo-chain", "--len", "3"]).0, 0);
}
