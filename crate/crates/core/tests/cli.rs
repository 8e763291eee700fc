//! Exit codes and byte-level reproducibility of the command-line tool.

mod common;

use std::path::Path;

use common::cli::{imitkd, run_all, train_once};

fn code(workdir: &Path, args: &[&str]) -> i32 {
    imitkd(workdir, args).status.code().expect("exit code")
}

#[test]
fn exit_codes_follow_error_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    assert_eq!(code(w, &["--help"]), 0);
    assert_eq!(code(w, &["no-such-command"]), 1);
    assert_eq!(code(w, &["train", "--variant", "ikd++"]), 1);
    assert_eq!(code(w, &["--set", "task.n_train=0", "gen-data"]), 1);
    assert_eq!(code(w, &["--set", "nonsense.key=1", "gen-data"]), 1);
    assert_eq!(code(w, &["pretrain-expert"]), 1, "no corpus yet");
    assert_eq!(code(w, &["gen-data"]), 0);
    assert_eq!(code(w, &["train", "--variant", "ikd_plus"]), 1, "no expert yet");
    assert_eq!(
        code(w, &["--set", "expert.target_accuracy=1.0", "--set", "expert.epochs=1", "pretrain-expert"]),
        3
    );
    assert!(!w.join("models/expert.ckpt").exists());
    std::fs::write(w.join("corpus/train.tsv"), "not\ta corpus\n").unwrap();
    assert_eq!(code(w, &["pretrain-expert"]), 2);
}

#[test]
fn pipeline_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let steps: &[&[&str]] = &[
        &["gen-data"],
        &["pretrain-expert"],
        &["pretrain-asr"],
        &["train", "--variant", "standard"],
        &["train", "--variant", "ikd_plus"],
        &["train", "--variant", "synthikd_plus"],
        &[
            "train",
            "--variant",
            "aggrevate",
            "--set",
            "train.iteration.iterations=1",
            "--set",
            "train.warm_start=\"ikd_plus\"",
        ],
        &["feasibility", "--students", "standard,ikd_plus"],
        &["distill", "--source", "synthetic"],
        &["inspect", "--model", "ikd_plus", "--k", "3"],
        &["report"],
    ];
    for w in [a.path(), b.path()] {
        run_all(w, steps).unwrap();
    }
    for rel in [
        "corpus/train.tsv",
        "models/expert.ckpt",
        "models/asr.ckpt",
        "models/synthikd_plus.ckpt",
        "models/aggrevate.ckpt",
        "reports/report.tsv",
        "reports/feasibility.dev.tsv",
        "corpus/train.distilled-synthetic.tsv",
        "logs/ikd_plus.iterations.tsv",
    ] {
        let x = std::fs::read(a.path().join(rel)).unwrap();
        let y = std::fs::read(b.path().join(rel)).unwrap();
        assert!(x == y, "{rel} differs between runs");
    }
    let report = std::fs::read_to_string(a.path().join("reports/report.tsv")).unwrap();
    assert_eq!(report.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4 * 2);
}

#[test]
fn training_report_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(train_once(a.path(), "synthikd_plus").unwrap(), train_once(b.path(), "synthikd_plus").unwrap());
}

#[test]
fn config_command_prints_resolved_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = imitkd(dir.path(), &["config"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# hash "));
    let again = String::from_utf8(imitkd(dir.path(), &["config"]).stdout).unwrap();
    assert_eq!(text, again);
    let changed = String::from_utf8(imitkd(dir.path(), &["--set", "seed=8", "config"]).stdout).unwrap();
    assert_ne!(text.lines().next(), changed.lines().next());
}
