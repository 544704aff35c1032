#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn monogp() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_monogp"));
    cmd.env_remove("MONOGP_SEED");
    cmd
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    monogp().args(args).current_dir(cwd).output().expect("binary runs")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

/// Last stderr line parsed as the error document.
pub fn stderr_error(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or("");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr tail is not JSON ({e}): {text}"))
}

pub fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}
