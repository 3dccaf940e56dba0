#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use curriculum::corpus::{self, Dataset, Instance, Split};

pub const BIN: &str = env!("CARGO_BIN_EXE_curriculum");

/// Instances whose relevant response repeats context words and whose other
/// candidates share none, so lexical overlap alone ranks them perfectly.
pub fn separable_dataset(n: usize, k: usize) -> Dataset {
    let instances = (0..n)
        .map(|i| {
            let pos = i % k;
            let turns = 1 + i % 4;
            let context: Vec<String> = (0..turns)
                .map(|t| format!("topic{i} part{i}x{t} how do I fix topic{i}"))
                .collect();
            let candidates = (0..k).map(|j| {
                if j == pos {
                    (format!("for topic{i} reinstall part{i}x0"), 1)
                } else {
                    let filler = "maybe".repeat(1 + (i + j) % 3);
                    (format!("unrelated{i}n{j} {filler} other{j}"), 0)
                }
            });
            Instance::new(format!("q{i:04}"), context, candidates)
        })
        .collect();
    Dataset::new(Split::Train, instances)
}

pub fn write_dataset(d: &Dataset, path: &Path) {
    std::fs::write(path, corpus::to_jsonl(d).unwrap()).unwrap();
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("spawn curriculum binary")
}

/// Runs the binary and returns stdout, failing loudly on a non-zero exit.
pub fn cli_ok(args: &[&str]) -> Result<String, String> {
    let out = run_cli(args);
    if !out.status.success() {
        return Err(format!(
            "`curriculum {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}
