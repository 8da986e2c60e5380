#![allow(dead_code)]

use std::process::{Command, Output};

/// The binary under test, with the run-configuration environment
/// variables cleared so only explicit test settings apply.
pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pseudochords"));
    for var in ["THREADS", "SEED", "BUDGET", "PSEUDOCHORDS_FAULT", "SC2_MATCH"] {
        cmd.env_remove(var);
    }
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("the binary should run")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("the binary should exit normally")
}

/// Field `col` of the first TSV row whose first field is `key`.
pub fn tsv_field(text: &str, key: &str, col: usize) -> String {
    for line in text.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.first() == Some(&key) {
            return fields[col].to_string();
        }
    }
    panic!("no TSV row starts with {key:?} in:\n{text}");
}
