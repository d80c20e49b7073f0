//! End-to-end runs of the command-line binary.

use std::fs;
use std::process::{Command, Output};

use clique_steiner::stp::parse_stp;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_clique-steiner"));
    c.env_remove("CLIQUE_STEINER_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(kv: &'a str, key: &str) -> &'a str {
    kv.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('='))).unwrap_or_else(|| panic!("no {key}"))
}

#[test]
fn solve_two_terminal_path_costs_path_length() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.stp");
    fs::write(&file, "SECTION Graph\nNodes 4\nE 1 2 3\nE 2 3 4\nE 3 4 5\nEND\nSECTION Terminals\nT 1\nT 4\nEND\nEOF\n").unwrap();
    let o = run(&["solve", "--alg", "stccm-a", "--input", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(value(&out, "cost"), "12");
    assert_eq!(out.lines().filter(|l| l.starts_with("edge=")).count(), 3);
}

#[test]
fn exact_rejects_thirteen_terminals() {
    let o = run(&["solve", "--alg", "exact", "--gen", "random", "--n", "14", "--t", "13"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at most 12 terminals"));
}

#[test]
fn trace_has_one_line_per_message() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let o = run(&["solve", "--alg", "stccm-b", "--gen", "random", "--n", "9", "--t", "3", "--seed", "4", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success());
    let messages: usize = value(&stdout(&o), "messages").parse().unwrap();
    let lines = fs::read_to_string(&trace).unwrap().lines().count();
    assert_eq!(lines, messages);
}

#[test]
fn gen_is_parseable_and_deterministic() {
    let a = run(&["gen", "--kind", "path", "--n", "6", "--t", "2", "--seed", "9"]);
    let b = run(&["gen", "--kind", "path", "--n", "6", "--t", "2", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let g = parse_stp(&stdout(&a)).unwrap();
    assert_eq!((g.node_count(), g.edge_count(), g.terminal_count()), (6, 5, 2));
}

#[test]
fn seed_variable_overrides_flag() {
    let flag = run(&["gen", "--kind", "random", "--n", "8", "--t", "3", "--seed", "21"]);
    let env = bin().args(["gen", "--kind", "random", "--n", "8", "--t", "3", "--seed", "1"]).env("CLIQUE_STEINER_SEED", "21").output().unwrap();
    assert_eq!(flag.stdout, env.stdout);
    let bad = bin().args(["gen", "--kind", "path", "--n", "4", "--t", "2"]).env("CLIQUE_STEINER_SEED", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn infeasible_generator_exits_one() {
    assert_eq!(run(&["gen", "--kind", "path", "--n", "3", "--t", "5"]).status.code(), Some(1));
    assert_eq!(run(&["gen", "--kind", "grid", "--n", "0", "--t", "1"]).status.code(), Some(1));
}

#[test]
fn max_rounds_must_be_positive() {
    assert_ne!(run(&["solve", "--gen", "path", "--n", "4", "--t", "2", "--max-rounds", "0"]).status.code(), Some(0));
}

#[test]
fn too_few_rounds_is_a_pipeline_error() {
    let o = run(&["solve", "--alg", "stccm-a", "--gen", "path", "--n", "8", "--t", "2", "--max-rounds", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_ratio_reports_maximum() {
    let o = run(&["verify", "--instances", "20", "--check", "ratio", "--seed", "3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let r: f64 = out.lines().find_map(|l| l.strip_prefix("max ratio / 2(1-1/t): ")).unwrap().parse().unwrap();
    assert!(r <= 1.0);
    assert!(out.ends_with("verify: PASS\n"));
}

#[test]
fn verify_with_broken_pruning_fails() {
    let o = run(&["verify", "--instances", "40", "--broken-pruning"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("is not a terminal"));
    assert!(out.lines().any(|l| l.starts_with("FAIL tree seed=")));
}

#[test]
fn json_record_matches_kv() {
    let args = ["solve", "--alg", "stccm-b", "--gen", "grid", "--n", "9", "--t", "3", "--seed", "2"];
    let kv = stdout(&run(&args));
    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&[&args[..], &["--format", "json"]].concat()))).unwrap();
    assert_eq!(json["cost"].as_str().unwrap(), value(&kv, "cost"));
    assert_eq!(json["rounds"].as_u64().unwrap().to_string(), value(&kv, "rounds"));
    assert_eq!(json["S"].as_u64().unwrap().to_string(), value(&kv, "S"));
}

#[test]
fn golden_records() {
    // regenerate with the listed command after an intentional change
    for (name, args) in [
        ("random_seed7_stccm_a.kv", ["solve", "--alg", "stccm-a", "--gen", "random", "--n", "10", "--t", "4", "--seed", "7"]),
        ("random_seed7_stccm_b.kv", ["solve", "--alg", "stccm-b", "--gen", "random", "--n", "10", "--t", "4", "--seed", "7"]),
        ("grid_seed3_kmb.kv", ["solve", "--alg", "kmb", "--gen", "grid", "--n", "12", "--t", "4", "--seed", "3"]),
    ] {
        let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
        let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {path}"));
        assert_eq!(stdout(&run(&args)), expected, "{name}");
    }
}

#[test]
fn bench_restricted_sweep() {
    let o = run(&["bench", "--kind", "path", "--n", "4,8", "--t", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("stccm-")).count(), 4);
    assert!(out.contains("fit stccm-a rounds"));
}
