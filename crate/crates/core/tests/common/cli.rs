//! Running the command-line binary on the smoke-test configuration.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn tiny_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/tiny.toml")
}

pub fn imitkd(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imitkd"))
        .arg("-w")
        .arg(workdir)
        .arg("-c")
        .arg(tiny_config())
        .args(args)
        .env("RUST_LOG", "trace")
        .output()
        .expect("binary runs")
}

/// Runs the commands in order, failing on the first non-zero exit.
pub fn run_all(workdir: &Path, commands: &[&[&str]]) -> Result<(), String> {
    for args in commands {
        let out = imitkd(workdir, args);
        if !out.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}

/// Data, expert, ASR and one trained variant.
pub fn train_once(workdir: &Path, variant: &str) -> Result<Vec<u8>, String> {
    run_all(
        workdir,
        &[&["gen-data"], &["pretrain-expert"], &["pretrain-asr"], &["train", "--variant", variant]],
    )?;
    std::fs::read(workdir.join("reports").join(format!("{variant}.tsv"))).map_err(|e| e.to_string())
}
