use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imitkd::corpus::Split;
use imitkd::harness::pipeline::{
    gen_data, run_distill, run_eval, run_feasibility, run_inspect, run_pretrain_asr, run_pretrain_expert,
    run_report, run_train,
};
use imitkd::harness::{render_feasibility, DistillSource, EvaluationReport, ExperimentConfig, Variant, Workdir};
use imitkd::{Error, Result};

/// Imitation-based knowledge distillation on a synthetic speech-translation task.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Experiment directory holding corpora, checkpoints and reports.
    #[arg(short, long, global = true, default_value = "work")]
    workdir: PathBuf,
    /// TOML configuration; defaults apply to every missing field.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set train.iteration.batch_size=16`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Log verbosity: -v info, -vv debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the task, vocabularies and train/dev/test corpora.
    GenData,
    /// Train the expert on clean transcripts until the accuracy gate holds.
    PretrainExpert,
    /// Train the ASR student and report dev/test WER.
    PretrainAsr,
    /// Train one variant, evaluate it on dev and test and write its report.
    Train {
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        /// Checkpoint and report name (defaults to the variant name).
        #[arg(long)]
        name: Option<String>,
    },
    /// Expert completion of student partial hypotheses.
    Feasibility {
        /// Student checkpoints (names under models/ or paths).
        #[arg(long, value_delimiter = ',', required = true)]
        students: Vec<String>,
        #[arg(long, default_value = "dev", value_parser = parse_split)]
        split: Split,
    },
    /// Replace training references by expert translations.
    Distill {
        #[arg(long, value_parser = parse_source)]
        source: DistillSource,
        /// Output corpus file (defaults to corpus/train.distilled-<source>.tsv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Decode a split with a checkpoint and store scored hypotheses.
    Eval {
        #[arg(long)]
        model: String,
        /// Name the hypotheses are stored under (defaults to the model argument).
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = "dev", value_parser = parse_split)]
        split: Split,
    },
    /// Top-k next-token probabilities of a model along one example.
    Inspect {
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "dev", value_parser = parse_split)]
        split: Split,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value_t = 8)]
        k: usize,
        /// Walk the reference instead of the model's greedy output.
        #[arg(long)]
        reference: bool,
    },
    /// Tables with significance tests against the baseline.
    Report {
        /// Stored evaluations to report (default: every translation model).
        #[arg(long, value_delimiter = ',')]
        names: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "dev,test", value_parser = parse_split)]
        splits: Vec<Split>,
        /// Merge existing report TSV files instead of scoring.
        #[arg(long, value_delimiter = ',')]
        merge: Vec<PathBuf>,
        /// Output name under reports/.
        #[arg(long, default_value = "report")]
        output: String,
    },
    /// Print the resolved configuration and its hash.
    Config,
}

fn parse_variant(s: &str) -> Result<Variant> {
    s.parse()
}

fn parse_split(s: &str) -> Result<Split> {
    s.parse()
}

fn parse_source(s: &str) -> Result<DistillSource> {
    s.parse()
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = cli.overrides.clone();
    if let Command::Train { variant, .. } = &cli.command {
        overrides.push(format!("train.variant=\"{variant}\""));
    }
    ExperimentConfig::from_toml(&text, &overrides)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let wd = Workdir::new(&cli.workdir);
    match cli.command {
        Command::GenData => {
            let (_, c) = gen_data(&cfg, &wd)?;
            println!("train {}\tdev {}\ttest {}\tcorpus_hash {}", c.train.len(), c.dev.len(), c.test.len(), wd.corpus_hash()?);
        }
        Command::PretrainExpert => {
            let r = run_pretrain_expert(&cfg, &wd)?;
            println!("expert dev accuracy {:.4} after {} epochs", r.dev_accuracy, r.history.len());
        }
        Command::PretrainAsr => {
            let r = run_pretrain_asr(&cfg, &wd)?;
            println!("asr dev WER {:.4}\ttest WER {:.4}\tin band {}", r.dev_wer, r.test_wer, r.in_band);
        }
        Command::Train { variant, name } => {
            let name = name.unwrap_or_else(|| variant.name().to_string());
            let run = run_train(&cfg, &wd, &name)?;
            print!("{}", run.report.to_markdown());
        }
        Command::Feasibility { students, split } => {
            print!("{}", render_feasibility(&run_feasibility(&cfg, &wd, &students, split)?));
        }
        Command::Distill { source, output } => {
            let name = match source {
                DistillSource::Gold => "gold",
                DistillSource::Synthetic => "synthetic",
            };
            let out = output.unwrap_or_else(|| wd.root.join("corpus").join(format!("train.distilled-{name}.tsv")));
            let changed = run_distill(&cfg, &wd, source, &out)?;
            println!("{}\tchanged references {:.4}", out.display(), changed);
        }
        Command::Eval { model, name, split } => {
            let name = name.unwrap_or_else(|| model.clone());
            let r = run_eval(&cfg, &wd, &model, &name, split)?;
            println!(
                "{name}\t{}\tBLEU {:.4}\tTER {:.4}\tWER {:.4}",
                split.name(),
                r.evaluation.bleu,
                r.evaluation.ter,
                r.evaluation.wer
            );
        }
        Command::Inspect {
            model,
            split,
            index,
            k,
            reference,
        } => print!("{}", run_inspect(&wd, &model, split, index, k, reference)?),
        Command::Report {
            names,
            splits,
            merge,
            output,
        } => {
            let report = if merge.is_empty() {
                let names = if names.is_empty() { wd.translation_runs()? } else { names };
                if names.is_empty() {
                    return Err(Error::Usage("no evaluated translation models to report".into()));
                }
                run_report(&cfg, &wd, &names, &splits)?
            } else {
                let mut parts = merge.iter().map(|p| {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::Data(format!("{}: {e}", p.display())))?;
                    EvaluationReport::parse_tsv(&text)
                });
                let first = parts.next().expect("merge list is non-empty")?;
                parts.try_fold(first, |acc, r| acc.merge(&r?))?
            };
            imitkd::harness::pipeline::write_report(&wd, &output, &report)?;
            print!("{}", report.to_markdown());
        }
        Command::Config => {
            print!("# hash {}\n{}", cfg.hash(), cfg.to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
