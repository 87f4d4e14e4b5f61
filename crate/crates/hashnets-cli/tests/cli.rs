//! End-to-end runs of the binary on the fixture corpus.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/components").join(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hashnets")).args(args).env_remove("HASHNETS_MAX_STATES").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn translate_writes_pnml() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("net.pnml");
    let o = run(&["translate", &fixture("dining_b.ahcl"), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("http://www.pnml.org/version-2009/grammar/ptnet"));
    // the written net reads back and explores like the original
    let a = run(&["reach", &fixture("dining_b.ahcl"), "--param", "N=4", "--json"]);
    let dir_pnml = dir.path().join("n4.pnml");
    run(&["translate", &fixture("dining_b.ahcl"), "--param", "N=4", "-o", dir_pnml.to_str().unwrap()]);
    let b = run(&["reach", dir_pnml.to_str().unwrap(), "--json"]);
    let ja: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let jb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(ja["states"], jb["states"]);
    assert_eq!(ja["states"], 9234);
}

#[test]
fn translate_is_deterministic_and_writes_dot() {
    let a = run(&["translate", &fixture("abp_reduced.ahcl"), "--order-consistency"]);
    let b = run(&["translate", &fixture("abp_reduced.ahcl"), "--order-consistency"]);
    assert_eq!(a.stdout, b.stdout);
    let dot = run(&["translate", &fixture("counter3.ahcl"), "--format", "dot"]);
    assert!(stdout(&dot).starts_with("digraph"));
}

#[test]
fn check_finds_the_dining_deadlock() {
    let o = run(&[
        "check",
        &fixture("dining_a.ahcl"),
        "--no-streams",
        "--reduce",
        "--formulas",
        &fixture("phil_macros.ctl"),
        "--formulas",
        &fixture("deadlock.ctl"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("deadlock: true"), "{}", stdout(&o));
}

#[test]
fn check_reports_json_with_schema() {
    let o = run(&[
        "check",
        &fixture("dining_b.ahcl"),
        "--param",
        "N=4",
        "--formulas",
        &fixture("phil_macros.ctl"),
        "--formulas",
        &fixture("dining.ctl"),
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    let verdict =
        |name: &str| v["results"].as_array().unwrap().iter().find(|r| r["formula"] == name).unwrap()["verdict"].clone();
    assert_eq!(verdict("deadlock"), "false");
    assert_eq!(verdict("mutual_exclusion"), "false");
    assert_eq!(
        v["results"].as_array().unwrap().iter().find(|r| r["formula"] == "eventual_entry").unwrap()["fairness"],
        "none"
    );
}

#[test]
fn strict_check_refuses_truncated_graphs() {
    let o = run(&[
        "check",
        &fixture("dining_b.ahcl"),
        "--max-states",
        "100",
        "--strict",
        "--formulas",
        &fixture("phil_macros.ctl"),
        "--formulas",
        &fixture("mutex.ctl"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("incomplete"));
}

#[test]
fn lang_against_the_oracle() {
    let o = run(&["lang", &fixture("counter3.ahcl"), "--max-len", "5", "--oracle"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "EQUAL {aaa}");
    let o = run(&["lang", &fixture("forever.ahcl"), "--max-len", "5", "--oracle"]);
    assert_eq!(stdout(&o).trim(), "EQUAL {}");
    let o = run(&["lang", &fixture("dining_b.ahcl"), "--oracle"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn deadlocks_on_ready_misuse() {
    let o = run(&["deadlocks", &fixture("ready_misuse.ahcl")]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("deadlocks: 1"), "{s}");
    assert!(s.contains("witness"));
    let o = run(&["deadlocks", &fixture("dining_b.ahcl"), "--param", "N=4", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["deadlocks"], 0);
    assert_eq!(v["verdict"], "false");
}

#[test]
fn reach_honours_the_environment_cap() {
    let o = Command::new(env!("CARGO_BIN_EXE_hashnets"))
        .args(["reach", &fixture("dining_b.ahcl"), "--json"])
        .env("HASHNETS_MAX_STATES", "50")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["truncated"], true);
    assert_eq!(v["states"], 50);
}

#[test]
fn reach_writes_dot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.dot");
    let o = run(&["reach", &fixture("counter3.ahcl"), "--dot", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("states:"));
    assert!(std::fs::read_to_string(out).unwrap().starts_with("digraph"));
}

#[test]
fn parse_prints_and_diagnoses() {
    let o = run(&["parse", &fixture("counter3.ahcl")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("repeat a! counter 3"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ahcl");
    std::fs::write(&bad, "component C { unit u { protocol { seq { x! } } } }").unwrap();
    let o = run(&["parse", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error"), "{}", stderr(&o));
    std::fs::write(&bad, "component C {").unwrap();
    let o = run(&["parse", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.ahcl:1:"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["check", &fixture("counter3.ahcl")]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["reach", "/nonexistent.ahcl"]).status.code(), Some(1));
}
