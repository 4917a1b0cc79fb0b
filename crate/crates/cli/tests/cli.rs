//! End-to-end tests against the installed binary: exit codes, frozen
//! outputs, cap precedence, and byte-level determinism.

use std::io::Write;
use std::process::{Command, Output};

fn natop() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_natop"));
    cmd.env_remove("NATOP_MAX_UNKNOWNS");
    cmd
}

fn run(args: &[&str]) -> Output {
    natop().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn classify_finds_the_bracket_dimension() {
    let out = run(&[
        "classify", "--src", "T", "--src", "T", "--tgt", "T", "--r", "1", "--m", "2",
        "--format", "json",
    ]);
    assert!(out.status.success(), "{}", stderr_str(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["dimension"], 1);
    assert_eq!(v["query"]["sources"][0], "T");
}

#[test]
fn invariants_of_the_mixed_tensor_are_one_dimensional() {
    let out = run(&["invariants", "--bundle", "T* * T", "--m", "3", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["dimension"], 1);
}

#[test]
fn casimir_value_is_frozen() {
    let out = run(&["casimir", "--m", "2", "--weight", "2"]);
    assert!(out.status.success());
    assert_eq!(stdout_str(&out).trim(), "8");
}

#[test]
fn bound_matches_a_hand_count() {
    // rho = (1,0), mu = (2,1): |mu + delta|^2 = 10 forces v = (1,1)
    let out = run(&["bound", "--rho", "1,0", "--mu", "2,1"]);
    assert!(out.status.success());
    assert_eq!(stdout_str(&out).trim(), "2");

    let out = run(&["bound", "--rho", "1,0", "--mu", "2,1,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundle_errors_exit_two_with_positions() {
    let out = run(&["invariants", "--bundle", "Lam^2", "--m", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_str(&out);
    assert!(err.contains("column 6"), "{err}");
    assert!(err.contains("T or T*"), "{err}");

    let out = run(&["invariants", "--bundle", "C^0", "--m", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("C^0"));
}

#[test]
fn resource_caps_exit_three() {
    let out = run(&[
        "classify", "--src", "T", "--src", "T", "--tgt", "T", "--r", "1", "--m", "2",
        "--max-unknowns", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_str(&out).contains("cap"));
}

#[test]
fn env_cap_applies_and_flags_beat_it() {
    let classify = [
        "classify", "--src", "T", "--src", "T", "--tgt", "T", "--r", "1", "--m", "2",
    ];
    let out = natop()
        .args(classify)
        .env("NATOP_MAX_UNKNOWNS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = natop()
        .args(classify)
        .args(["--max-unknowns", "200000"])
        .env("NATOP_MAX_UNKNOWNS", "1")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_str(&out));

    let out = natop()
        .args(classify)
        .env("NATOP_MAX_UNKNOWNS", "twelve")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_sets_caps_and_flags_override() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "# tight cap for tests\nmax_unknowns = 1").unwrap();
    let path = file.path().to_str().unwrap().to_owned();
    let classify = [
        "classify", "--src", "T", "--src", "T", "--tgt", "T", "--r", "1", "--m", "2",
    ];

    let out = natop().args(classify).args(["--config", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = natop()
        .args(classify)
        .args(["--config", &path, "--max-unknowns", "200000"])
        .output()
        .unwrap();
    assert!(out.status.success());

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "m = 3").unwrap();
    let out = natop()
        .args(classify)
        .args(["--config", bad.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("unknown key"));
}

#[test]
fn verification_reports_are_byte_identical_per_seed() {
    let args = [
        "verify-brackets", "--m", "2", "--probes", "2", "--seed", "5", "--format", "json",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success(), "{}", stderr_str(&first));
    assert_eq!(first.stdout, second.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&first)).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["identities"].as_array().unwrap().len(), 7);
}

#[test]
fn functional_suite_passes_on_splines() {
    let out = run(&["verify-functionals", "--trials", "1", "--seed", "3", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr_str(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["m"], 2);
}

#[test]
fn locality_demo_prints_the_three_verdicts() {
    let out = run(&["demo-locality", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let verdicts: Vec<bool> = v["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["local"].as_bool().unwrap())
        .collect();
    assert_eq!(verdicts, [true, false, true]);
}
