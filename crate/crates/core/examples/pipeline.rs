//! The whole experiment at smoke-test scale in a temporary directory: data,
//! expert, ASR, two training variants, feasibility and a report.

use imitkd::harness::pipeline::{
    gen_data, run_feasibility, run_pretrain_asr, run_pretrain_expert, run_report, run_train, write_report,
};
use imitkd::harness::{ExperimentConfig, Workdir};
use imitkd::corpus::Split;

fn main() -> imitkd::Result<()> {
    let text = include_str!("../../../configs/tiny.toml");
    let cfg = ExperimentConfig::from_toml(text, &[])?;
    let dir = std::env::temp_dir().join("imitkd-pipeline-example");
    let wd = Workdir::new(&dir);
    gen_data(&cfg, &wd)?;
    let expert = run_pretrain_expert(&cfg, &wd)?;
    println!("expert dev accuracy {:.3}", expert.dev_accuracy);
    let asr = run_pretrain_asr(&cfg, &wd)?;
    println!("asr dev WER {:.3}", asr.dev_wer);
    for variant in ["standard", "ikd_plus"] {
        let cfg = ExperimentConfig::from_toml(text, &[format!("train.variant=\"{variant}\"")])?;
        run_train(&cfg, &wd, variant)?;
    }
    run_feasibility(&cfg, &wd, &["standard".into(), "ikd_plus".into()], Split::Dev)?;
    let report = run_report(&cfg, &wd, &["standard".into(), "ikd_plus".into()], &[Split::Dev, Split::Test])?;
    write_report(&wd, "example", &report)?;
    print!("{}", report.to_markdown());
    println!("artifacts in {}", dir.display());
    Ok(())
}
