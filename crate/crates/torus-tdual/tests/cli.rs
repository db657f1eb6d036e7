use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use torus_tdual::cli::schema::ProblemFile;
use torus_tdual::cli::{run_text, RunFlags};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn shipped_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(data_dir())
        .expect("data directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
}

fn tdual(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tdual")).args(args).output().expect("binary runs")
}

fn scratch_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tdual-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn shipped_files_round_trip_byte_for_byte() {
    let files = shipped_files();
    assert!(files.len() >= 8);
    for p in files {
        let text = std::fs::read_to_string(&p).unwrap();
        let parsed = ProblemFile::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(parsed.to_pretty(), text, "{}", p.display());
        assert_eq!(ProblemFile::parse(&parsed.to_pretty()).unwrap(), parsed);
    }
}

#[test]
fn every_command_has_a_shipped_example() {
    let commands: Vec<String> = shipped_files()
        .iter()
        .map(|p| ProblemFile::parse(&std::fs::read_to_string(p).unwrap()).unwrap().problem.command().to_string())
        .collect();
    for c in ["normal-form", "gamma-h", "pushforward", "phi-dual", "sp-decompose", "tdualize", "higher-rank", "semiflat"] {
        assert!(commands.iter().any(|x| x == c), "no example for {c}");
    }
}

#[test]
fn shipped_files_run_cleanly_and_deterministically() {
    for p in shipped_files() {
        let text = std::fs::read_to_string(&p).unwrap();
        let command = ProblemFile::parse(&text).unwrap().problem.command();
        let flags = RunFlags { seed: 3, ..Default::default() };
        let a = run_text(command, &text, &flags).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let b = run_text(command, &text, &flags).unwrap();
        assert!(a.success, "{}", p.display());
        assert_eq!(a.to_pretty(), b.to_pretty(), "{}", p.display());
        let doc = &a.document;
        assert_eq!(doc["version"], "torus-tdual/1");
        assert_eq!(doc["command"], command);
        assert!(doc["convention"].is_object());
        assert!(doc["provenance"].as_array().is_some_and(|v| !v.is_empty()));
        // the report echoes the problem file exactly
        let echoed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["input"], echoed);
    }
}

#[test]
fn binary_writes_reports_and_reports_success() {
    let input = data_dir().join("omega.json");
    let out = std::env::temp_dir().join(format!("tdual-omega-{}.json", std::process::id()));
    let run = tdual(&["sp-decompose", input.to_str().unwrap(), "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    assert!(run.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let gens = doc["result"]["generators"].as_array().unwrap();
    assert_eq!(gens.len(), 1);
    assert_eq!(gens[0]["kind"], "semi-involution");
    assert_eq!(doc["flags"]["seed"], 1);
}

#[test]
fn malformed_inputs_exit_with_validation_code() {
    let float_entry = scratch_file("float.json", r#"{"version":"torus-tdual/1","command":"gamma-h","input":{"form":[[0,0.5],[-0.5,0]]}}"#);
    let wrong_version = scratch_file("old.json", r#"{"version":"torus-tdual/0","command":"gamma-h","input":{"form":[["0","1"],["-1","0"]]}}"#);
    let not_skew = scratch_file("skew.json", r#"{"version":"torus-tdual/1","command":"normal-form","input":{"form":[["0","1"],["1","0"]]}}"#);
    let ragged = scratch_file("ragged.json", r#"{"version":"torus-tdual/1","command":"normal-form","input":{"form":[["0","1"],["-1"]]}}"#);
    for (cmd, p) in [("gamma-h", &float_entry), ("gamma-h", &wrong_version), ("normal-form", &not_skew), ("normal-form", &ragged)] {
        let run = tdual(&[cmd, p.to_str().unwrap()]);
        assert_eq!(run.status.code(), Some(2), "{}: {}", p.display(), String::from_utf8_lossy(&run.stderr));
        assert!(!run.stderr.is_empty());
    }
    // a file for one command handed to another
    let run = tdual(&["normal-form", data_dir().join("omega.json").to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let run = tdual(&["gamma-h", "/nonexistent/problem.json"]);
    assert_eq!(run.status.code(), Some(2));
    let run = tdual(&["verify", "no-such-suite"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn mathematical_preconditions_exit_with_code_three() {
    // not in Sp(F, Z)
    let not_sp = scratch_file("notsp.json", r#"{"version":"torus-tdual/1","command":"sp-decompose","input":{"divisors":["1"],"matrix":[["2","0"],["0","1"]]}}"#);
    let run = tdual(&["sp-decompose", not_sp.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
    // a twist that is not a character of the kernel of a degenerate curvature
    let degenerate = scratch_file(
        "degenerate.json",
        r#"{"version":"torus-tdual/1","command":"phi-dual","input":{"curvature":[["0","3","0","0"],["-3","0","0","0"],["0","0","0","0"],["0","0","0","0"]],"twist":["0","0","1/2","0"]}}"#,
    );
    let run = tdual(&["phi-dual", degenerate.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn verify_output_is_byte_identical_across_runs() {
    let a = tdual(&["verify", "cocycle", "--seed", "7"]);
    let b = tdual(&["verify", "cocycle", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["result"]["suites_passed"], 1);
}

#[test]
fn thread_cap_does_not_change_reports() {
    let one = Command::new(env!("CARGO_BIN_EXE_tdual"))
        .args(["verify", "tensor-splitting", "--seed", "5"])
        .env("TDUAL_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_tdual"))
        .args(["verify", "tensor-splitting", "--seed", "5"])
        .env("TDUAL_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
}
