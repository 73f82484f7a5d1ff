#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use neighborly_cli::{execute, Cli};
use serde_json::Value;

pub fn parse_report(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).expect("report line is JSON")).collect()
}

/// Runs the CLI in-process with its report written to a scratch file.
pub fn run_cli(args: &[&str]) -> Vec<Value> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.jsonl");
    let mut full = vec!["neighborly"];
    full.extend_from_slice(args);
    full.push("--output");
    full.push(out.to_str().unwrap());
    let cli = Cli::try_parse_from(full).expect("valid flags");
    execute(&cli).expect("run succeeds");
    parse_report(&std::fs::read_to_string(out).unwrap())
}

pub fn records<'a>(report: &'a [Value], kind: &str) -> Vec<&'a Value> {
    report.iter().filter(|r| r["record"] == kind).collect()
}

pub fn summary(report: &[Value]) -> &Value {
    records(report, "summary").pop().expect("summary record")
}

/// Runs the built binary with `NEIGHBORLY_SEED` cleared unless given.
pub fn run_bin(args: &[&str], env_seed: Option<&str>, cwd: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_neighborly"));
    cmd.args(args).current_dir(cwd).env_remove(neighborly_cli::SEED_ENV);
    if let Some(s) = env_seed {
        cmd.env(neighborly_cli::SEED_ENV, s);
    }
    cmd.output().expect("binary runs")
}
