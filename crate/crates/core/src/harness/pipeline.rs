//! Command-level operations over a [`Workdir`]; the CLI is a thin wrapper.

use std::path::Path;
use std::time::Instant;

use super::config::{ExperimentConfig, Variant};
use super::distill::{build_distilled_corpus, changed_fraction, DistillSource};
use super::eval::{channels_of, evaluate_checkpoint, score_hypotheses, OutputChannel};
use super::feasibility::{feasibility_eval, render_feasibility, FeasibilityConfig, FeasibilityRow};
use super::pretrain::{pretrain_asr, pretrain_expert, AsrReport, EpochRecord, ExpertReport};
use super::report::{build_report, EvaluationReport, ScoredRun};
use super::train::{check_prerequisites, train_variant, Prerequisites};
use super::workdir::{load_model_file, write_file, RunInfo, Workdir};
use crate::corpus::{load_corpus, save_corpus, Split, SplitCorpus, TaskSpec, TokenId, Vocabularies};
use crate::decode::{greedy_decode, render_topk, DecodeConfig};
use crate::imitation::{render_stats, IterationStats};
use crate::metrics::{render_histogram, wer_histogram};
use crate::policy::NeuralSeq2SeqPolicy;
use crate::rng::derive_seed;
use crate::{Error, Result};

pub const EXPERT: &str = "expert";
pub const ASR: &str = "asr";

fn render_epochs(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch\tloss\tmetric\n");
    for h in history {
        out.push_str(&format!("{}\t{:.6}\t{:.6}\n", h.epoch, h.loss, h.metric));
    }
    out
}

fn log_wall_time(wd: &Workdir, name: &str, start: Instant) -> Result<()> {
    let secs = start.elapsed().as_secs_f64();
    log::info!("{name}: {secs:.1} s");
    write_file(&wd.root.join("logs").join(format!("{name}.time")), format!("{secs:.3}\n"))
}

/// Generates the task, its vocabularies and the train/dev/test corpora.
pub fn gen_data(cfg: &ExperimentConfig, wd: &Workdir) -> Result<(Vocabularies, SplitCorpus)> {
    let spec = TaskSpec::generate(&cfg.task.params, cfg.seed)?;
    let corpus = SplitCorpus::generate(&spec, cfg.task.n_train, derive_seed(cfg.seed, 1))?;
    let vocabs = wd.save_task(&spec, &corpus)?;
    write_file(&wd.root.join("experiment.toml"), cfg.to_toml())?;
    Ok((vocabs, corpus))
}

pub fn run_pretrain_expert(cfg: &ExperimentConfig, wd: &Workdir) -> Result<ExpertReport> {
    let start = Instant::now();
    let vocabs = wd.load_vocabs()?;
    let corpus = wd.load_corpus(&vocabs)?;
    let result = pretrain_expert(&corpus.train, &corpus.dev, &vocabs, &cfg.expert, cfg.seed);
    let (model, report) = result?;
    wd.save_model(EXPERT, &model, None)?;
    write_file(&wd.log_path(EXPERT, "epochs"), render_epochs(&report.history))?;
    log_wall_time(wd, EXPERT, start)?;
    Ok(report)
}

pub fn run_pretrain_asr(cfg: &ExperimentConfig, wd: &Workdir) -> Result<AsrReport> {
    let start = Instant::now();
    let vocabs = wd.load_vocabs()?;
    let corpus = wd.load_corpus(&vocabs)?;
    let (model, report) = pretrain_asr(&corpus.train, &corpus.dev, &corpus.test, &vocabs, &cfg.asr, cfg.seed)?;
    wd.save_model(ASR, &model, None)?;
    write_file(&wd.log_path(ASR, "epochs"), render_epochs(&report.history))?;
    let info = RunInfo {
        name: ASR.into(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        output: "transcript".into(),
    };
    let decode = DecodeConfig::beam(cfg.asr.eval_beam);
    for split in [Split::Dev, Split::Test] {
        let ev = evaluate_checkpoint(&model, corpus.get(split), &vocabs, &decode)?;
        wd.save_hypotheses(&info, split, &ev.hypotheses, &vocabs.source)?;
        if split == Split::Dev {
            let pairs: Vec<(&[TokenId], &[TokenId])> = ev
                .hypotheses
                .iter()
                .zip(corpus.get(split))
                .map(|(h, e)| (h.as_slice(), e.transcript.body()))
                .collect();
            write_file(&wd.log_path(ASR, "wer_histogram"), render_histogram(&wer_histogram(&pairs, 0.1)?))?;
        }
    }
    log_wall_time(wd, ASR, start)?;
    Ok(report)
}

fn optional_model(wd: &Workdir, name: &str) -> Result<Option<NeuralSeq2SeqPolicy>> {
    if wd.has_model(name) {
        wd.load_model(name).map(Some)
    } else {
        Ok(None)
    }
}

/// Result of one `train` run.
pub struct TrainRun {
    pub student: NeuralSeq2SeqPolicy,
    pub stats: Vec<IterationStats>,
    pub report: EvaluationReport,
}

/// Trains `cfg.train.variant`, stores the checkpoint as `name`, evaluates
/// it on dev and test and writes a single-system report.
pub fn run_train(cfg: &ExperimentConfig, wd: &Workdir, name: &str) -> Result<TrainRun> {
    let start = Instant::now();
    let tc = &cfg.train;
    let expert = match &tc.expert {
        Some(p) => Some(config_model(wd, p)?),
        None if tc.variant.needs_expert() => optional_model(wd, EXPERT)?,
        None => None,
    };
    let asr = match &tc.asr {
        Some(p) => Some(config_model(wd, p)?),
        None => optional_model(wd, ASR)?,
    };
    let warm = match (&tc.warm_start, tc.variant) {
        (Some(p), Variant::Aggrevate) => Some(config_model(wd, p)?),
        _ => None,
    };
    let pre = Prerequisites {
        expert: expert.as_ref(),
        asr: asr.as_ref(),
        warm_start: warm.as_ref(),
    };
    check_prerequisites(tc, &pre)?;
    let vocabs = wd.load_vocabs()?;
    let mut corpus = wd.load_corpus(&vocabs)?;
    if let Some(p) = &tc.corpus {
        corpus.train = load_corpus(&wd.root.join(p), &vocabs)?;
    }
    let outcome = train_variant(tc, &mut corpus.train, &corpus.dev, &vocabs, &pre, &mut ())?;
    wd.save_model(name, &outcome.student, Some(&outcome.optimizer))?;
    write_file(&wd.log_path(name, "iterations"), render_stats(&outcome.stats))?;
    let runs = evaluate_named(cfg, wd, name, &outcome.student, &corpus, &vocabs, &[Split::Dev, Split::Test])?;
    let report = build_report(&runs, &cfg.report.baseline, &wd.corpus_hash()?, cfg.report.trials, cfg.report.seed)?;
    write_report(wd, name, &report)?;
    log_wall_time(wd, name, start)?;
    Ok(TrainRun {
        student: outcome.student,
        stats: outcome.stats,
        report,
    })
}

/// Decodes the splits with the configured decoder and stores hypotheses.
pub fn evaluate_named(
    cfg: &ExperimentConfig,
    wd: &Workdir,
    name: &str,
    model: &NeuralSeq2SeqPolicy,
    corpus: &SplitCorpus,
    vocabs: &Vocabularies,
    splits: &[Split],
) -> Result<Vec<ScoredRun>> {
    let (_, output) = channels_of(model, vocabs)?;
    let info = RunInfo {
        name: name.into(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        output: match output {
            OutputChannel::Translation => "translation".into(),
            OutputChannel::Transcript => "transcript".into(),
        },
    };
    let out_vocab = match output {
        OutputChannel::Translation => &vocabs.target,
        OutputChannel::Transcript => &vocabs.source,
    };
    let mut runs = Vec::new();
    for &split in splits {
        let ev = evaluate_checkpoint(model, corpus.get(split), vocabs, &cfg.train.decode)?;
        wd.save_hypotheses(&info, split, &ev.hypotheses, out_vocab)?;
        runs.push(ScoredRun {
            name: name.into(),
            split,
            seed: cfg.seed,
            config_hash: info.config_hash.clone(),
            evaluation: ev,
        });
    }
    Ok(runs)
}

/// Model named in the configuration: a bare name under models/ or a path
/// taken relative to the experiment directory.
fn config_model(wd: &Workdir, p: &Path) -> Result<NeuralSeq2SeqPolicy> {
    if p.extension().is_none() && p.components().count() == 1 {
        wd.load_model(&p.to_string_lossy())
    } else {
        load_model_file(&wd.root.join(p))
    }
}

/// Resolves a model argument: an existing file path or a name under models/.
pub fn resolve_model(wd: &Workdir, arg: &str) -> Result<NeuralSeq2SeqPolicy> {
    let p = Path::new(arg);
    if p.extension().is_some_and(|e| e == "ckpt") || p.components().count() > 1 {
        load_model_file(p)
    } else {
        wd.load_model(arg)
    }
}

pub fn run_eval(cfg: &ExperimentConfig, wd: &Workdir, model: &str, name: &str, split: Split) -> Result<ScoredRun> {
    let m = resolve_model(wd, model)?;
    let vocabs = wd.load_vocabs()?;
    let corpus = wd.load_corpus(&vocabs)?;
    let mut runs = evaluate_named(cfg, wd, name, &m, &corpus, &vocabs, &[split])?;
    Ok(runs.remove(0))
}

pub fn run_feasibility(
    cfg: &ExperimentConfig,
    wd: &Workdir,
    students: &[String],
    split: Split,
) -> Result<Vec<FeasibilityRow>> {
    let expert = wd.load_model(EXPERT)?;
    let asr = wd.load_model(ASR)?;
    let models: Vec<NeuralSeq2SeqPolicy> = students.iter().map(|s| resolve_model(wd, s)).collect::<Result<_>>()?;
    let named: Vec<(&str, &NeuralSeq2SeqPolicy)> = students.iter().map(|s| s.as_str()).zip(&models).collect();
    let vocabs = wd.load_vocabs()?;
    let examples = wd.load_split(split, &vocabs)?;
    let fc = FeasibilityConfig {
        asr_beam: cfg.train.iteration.asr_beam,
        fixed_cut: None,
        seed: cfg.seed,
    };
    let rows = feasibility_eval(&named, &expert, &asr, &examples, &fc)?;
    write_file(&wd.report_path(&format!("feasibility.{}", split.name()), "tsv"), render_feasibility(&rows))?;
    Ok(rows)
}

/// Writes the distilled training corpus to `output` and returns the
/// fraction of changed references.
pub fn run_distill(cfg: &ExperimentConfig, wd: &Workdir, source: DistillSource, output: &Path) -> Result<f64> {
    let expert = wd.load_model(EXPERT)?;
    let asr = match source {
        DistillSource::Synthetic => Some(wd.load_model(ASR)?),
        DistillSource::Gold => None,
    };
    let vocabs = wd.load_vocabs()?;
    let train = wd.load_split(Split::Train, &vocabs)?;
    let beam = cfg.train.decode.beam_size;
    let distilled = build_distilled_corpus(&train, &expert, source, asr.as_ref(), beam)?;
    if let Some(dir) = output.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_corpus(output, &distilled, &vocabs)?;
    Ok(changed_fraction(&train, &distilled))
}

/// Top-k next-token table of `model` along a sequence of one example: its
/// own greedy output, or the reference when `along_reference`.
pub fn run_inspect(
    wd: &Workdir,
    model: &str,
    split: Split,
    index: usize,
    k: usize,
    along_reference: bool,
) -> Result<String> {
    let m = resolve_model(wd, model)?;
    let vocabs = wd.load_vocabs()?;
    let examples = wd.load_split(split, &vocabs)?;
    let ex = examples
        .get(index)
        .ok_or_else(|| Error::Usage(format!("{} has {} examples", split.name(), examples.len())))?;
    let (input, output) = channels_of(&m, &vocabs)?;
    let source = super::eval::input_of(ex, input)?;
    let out_vocab = match output {
        OutputChannel::Translation => &vocabs.target,
        OutputChannel::Transcript => &vocabs.source,
    };
    let seq: Vec<TokenId> = if along_reference {
        super::eval::reference_of(ex, output).to_vec()
    } else {
        greedy_decode(&m, source, &DecodeConfig::greedy())?.body().to_vec()
    };
    render_topk(&m, source, &seq, k, |t| out_vocab.symbol(t).unwrap_or("<?>").to_string())
}

/// Recomputes scores from stored hypotheses and tests every system against
/// the baseline.
pub fn run_report(cfg: &ExperimentConfig, wd: &Workdir, names: &[String], splits: &[Split]) -> Result<EvaluationReport> {
    let vocabs = wd.load_vocabs()?;
    let corpus = wd.load_corpus(&vocabs)?;
    let mut runs = Vec::new();
    for name in names {
        let info = wd.load_run_info(name)?;
        let (vocab, transcript) = match info.output.as_str() {
            "transcript" => (&vocabs.source, true),
            _ => (&vocabs.target, false),
        };
        for &split in splits {
            let hyps = wd.load_hypotheses(name, split, vocab)?;
            let refs: Vec<&[TokenId]> = corpus
                .get(split)
                .iter()
                .map(|e| if transcript { e.transcript.body() } else { e.translation.body() })
                .collect();
            runs.push(ScoredRun {
                name: name.clone(),
                split,
                seed: info.seed,
                config_hash: info.config_hash.clone(),
                evaluation: score_hypotheses(hyps, &refs)?,
            });
        }
    }
    build_report(&runs, &cfg.report.baseline, &wd.corpus_hash()?, cfg.report.trials, cfg.report.seed)
}

pub fn write_report(wd: &Workdir, name: &str, report: &EvaluationReport) -> Result<()> {
    write_file(&wd.report_path(name, "tsv"), report.to_tsv())?;
    write_file(&wd.report_path(name, "md"), report.to_markdown())
}
