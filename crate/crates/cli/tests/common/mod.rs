#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crossmedia"))
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawning crossmedia")
}

/// Runs a command that must succeed and returns its stdout.
pub fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "crossmedia {} failed ({:?}):\n{}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Writes a small synthetic corpus into `dir/data`.
pub fn small_corpus(dir: &Path) -> PathBuf {
    run_ok(
        dir,
        &[
            "--seed",
            "7",
            "synth",
            "--clusters",
            "5",
            "--queries",
            "30",
            "--log-queries",
            "120",
            "--images",
            "400",
            "--vocab",
            "40",
            "--feature-dim",
            "8",
            "--embed-dim",
            "8",
            "--pool-size",
            "20",
            "--out",
            "data",
        ],
    );
    dir.join("data")
}

/// Every regular file under `root`, relative and sorted.
pub fn files(root: &Path) -> Vec<PathBuf> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

/// Mean value from a per-query report's `ALL` row.
pub fn report_mean(path: &Path) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix("ALL\t"))
        .expect("report has an ALL row")
        .parse()
        .unwrap()
}
