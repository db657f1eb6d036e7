//! Runs a shipped problem file through the report pipeline, as the `tdual` binary does.
use std::path::Path;
use torus_tdual::cli::{run_text, run_verify, RunFlags};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/flat-character.json");
    let text = std::fs::read_to_string(path).expect("shipped file");
    let flags = RunFlags { seed: 7, ..Default::default() };
    let report = run_text("tdualize", &text, &flags).expect("valid problem");
    println!("{}", report.to_pretty());
    let verify = run_verify("higher-rank", &flags).expect("known suite");
    println!("higher-rank suite passed: {}", verify.success);
}
