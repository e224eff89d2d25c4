//! End-to-end checks of the `rzk` binary: flag surface, report fields,
//! exit codes, and determinism under a fixed seed.

use std::io::Write;
use std::process::{Command, Output};

fn rzk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rzk"))
        .args(args)
        .env_remove("RZK_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let last = text.lines().last().expect("some output");
    serde_json::from_str(last).expect("last line is JSON")
}

fn graph_file(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f
}

#[test]
fn params_reference_values() {
    let out = rzk(&["params", "--n", "3", "--k", "1"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["q0"], 3072);
    assert_eq!(v["q"], 3079);
    assert_eq!(v["bits"], 108);
}

#[test]
fn params_rejects_out_of_range_as_usage_error() {
    let out = rzk(&["params", "--n", "2", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rzk(&["params", "--n", "3", "--k", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zk_compare_reports_zero_distance() {
    let out = rzk(&["zk-compare", "--n", "3", "--q", "2"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["tv_distance"], "0");
    assert_eq!(v["mutation_detected"], true);
}

#[test]
fn game_reports_exact_rationals() {
    let out = rzk(&["game", "--q", "5", "--p", "2", "--reps", "2"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["parallel_coupled_exact"], "11/75");
    assert_eq!(v["normalization_ratio"], "4/3");
}

#[test]
fn binding_reference_epsilon() {
    let out = rzk(&["binding", "--kind", "string", "--p", "2", "--q", "1000000"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let eps = v["epsilon"].as_f64().unwrap();
    assert!((eps - 0.08).abs() < 1e-9);
    // arbitrary-precision modulus parses
    let big_q = "3045481818931295228395520"; // 64·8!·2^60 scale
    let out = rzk(&["binding", "--kind", "parallel", "--p", "4", "--q", big_q]);
    assert!(out.status.success());
}

#[test]
fn run_accepts_on_hamiltonian_graph() {
    let f = graph_file("3 3\n1 2\n2 3\n1 3\n");
    let out = rzk(&[
        "run",
        "--graph",
        f.path().to_str().unwrap(),
        "--q",
        "5",
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "accept");
    assert_eq!(v["n"], 3);
    assert!(v["timeline"].as_array().unwrap().len() >= 8);
}

#[test]
fn run_fails_cleanly_without_witness() {
    let f = graph_file("3 2\n1 2\n2 3\n");
    let out = rzk(&["run", "--graph", f.path().to_str().unwrap(), "--q", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert!(v["error"].as_str().unwrap().contains("Hamiltonian"));
}

#[test]
fn run_rejects_composite_modulus() {
    let f = graph_file("3 3\n1 2\n2 3\n1 3\n");
    let out = rzk(&["run", "--graph", f.path().to_str().unwrap(), "--q", "6"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert!(v["error"].as_str().unwrap().contains("not prime"));
}

#[test]
fn attack_is_consistent_with_exact_value() {
    let f = graph_file("3 2\n1 2\n2 3\n");
    let out = rzk(&[
        "attack",
        "--graph",
        f.path().to_str().unwrap(),
        "--q",
        "5",
        "--strategy",
        "optimal",
        "--trials",
        "20000",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["exact_value"], "3/5");
    assert_eq!(v["consistent"], true);
}

#[test]
fn verify_quantum_streams_trials_and_summarizes() {
    let out = rzk(&[
        "verify-quantum",
        "--dim",
        "6",
        "--n",
        "3",
        "--s",
        "2",
        "--trials",
        "20",
        "--seed",
        "5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21, "20 trial lines plus a summary");
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    for field in ["theorem", "dim", "n", "S", "V", "E", "bound", "margin", "pass"] {
        assert!(first.get(field).is_some(), "missing {field}");
    }
    let summary = stdout_json(&out);
    assert_eq!(summary["fail"], 0);
    assert_eq!(summary["pass"], 20);
}

#[test]
fn verify_quantum_all_covers_every_theorem() {
    let out = rzk(&[
        "verify-quantum",
        "--trials",
        "8",
        "--theorem",
        "all",
        "--seed",
        "6",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["multi", "almost-orthogonal", "main-proposition", "pinching"] {
        assert!(text.contains(name), "missing sweep {name}");
    }
}

#[test]
fn reports_are_deterministic_under_fixed_seed() {
    let args = [
        "verify-quantum",
        "--dim",
        "8",
        "--n",
        "4",
        "--s",
        "2",
        "--trials",
        "10",
        "--seed",
        "42",
    ];
    let a = rzk(&args);
    let b = rzk(&args);
    assert_eq!(a.stdout, b.stdout);

    let f = graph_file("3 3\n1 2\n2 3\n1 3\n");
    let run_args = [
        "run",
        "--graph",
        f.path().to_str().unwrap(),
        "--q",
        "3079",
        "--seed",
        "11",
        "--trials",
        "5",
    ];
    let a = rzk(&run_args);
    let b = rzk(&run_args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_file_collects_trial_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trials.jsonl");
    let out = rzk(&[
        "verify-quantum",
        "--trials",
        "7",
        "--seed",
        "1",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written.lines().count(), 7);
}

#[test]
fn run_output_collects_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcripts.jsonl");
    let f = graph_file("3 3\n1 2\n2 3\n1 3\n");
    let out = rzk(&[
        "run",
        "--graph",
        f.path().to_str().unwrap(),
        "--q",
        "3079",
        "--seed",
        "2",
        "--trials",
        "3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let written = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = written.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in lines {
        let t: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(t["verdict"], "accept");
        assert_eq!(t["q"], "3079");
    }
}

#[test]
fn seed_env_variable_is_honored() {
    let with_flag = rzk(&["verify-quantum", "--trials", "5", "--seed", "123"]);
    let with_env = Command::new(env!("CARGO_BIN_EXE_rzk"))
        .args(["verify-quantum", "--trials", "5"])
        .env("RZK_SEED", "123")
        .output()
        .unwrap();
    assert_eq!(with_flag.stdout, with_env.stdout);
}
