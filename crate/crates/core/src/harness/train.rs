use super::config::{Variant, VariantConfig};
use super::pretrain::fresh_model;
use crate::corpus::{ParallelExample, TokenId, Vocabularies};
use crate::decode::oracle_corrections;
use crate::imitation::{
    aggrevate_train, attach_synthetic, dagger_train, dev_bleu, iteration_chunks, step, IterationConfig,
    IterationStats, Observer, OracleInput,
};
use crate::policy::{
    average_models, kd_plus_loss, smoothed_ce_loss, warm_start_encoder, KdItem, NeuralSeq2SeqPolicy, Optimizer,
    Policy, Trainable, LABEL_SMOOTHING,
};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Frozen models a variant may depend on.
#[derive(Clone, Copy, Default)]
pub struct Prerequisites<'a> {
    pub expert: Option<&'a NeuralSeq2SeqPolicy>,
    pub asr: Option<&'a NeuralSeq2SeqPolicy>,
    /// AggreVaTe: the student to fine-tune.
    pub warm_start: Option<&'a NeuralSeq2SeqPolicy>,
}

pub struct TrainOutcome {
    pub student: NeuralSeq2SeqPolicy,
    pub optimizer: Optimizer,
    pub stats: Vec<IterationStats>,
}

/// Fails with a configuration error when a model the variant needs is absent.
pub fn check_prerequisites(cfg: &VariantConfig, pre: &Prerequisites<'_>) -> Result<()> {
    let v = cfg.variant;
    if v.needs_expert() && pre.expert.is_none() {
        return Err(Error::Config(format!("variant {v} needs an expert checkpoint")));
    }
    let synthetic = v.oracle_input() == Some(OracleInput::Synthetic)
        || (v == Variant::Aggrevate && cfg.iteration.oracle_input == OracleInput::Synthetic);
    if synthetic && pre.asr.is_none() {
        return Err(Error::Config(format!("variant {v} needs an ASR student checkpoint")));
    }
    if v == Variant::Aggrevate && pre.warm_start.is_none() {
        return Err(Error::Config("aggrevate needs a warm-start checkpoint".into()));
    }
    if v != Variant::Aggrevate && cfg.warm_start_encoder && pre.asr.is_none() {
        return Err(Error::Config(
            "encoder warm start needs an ASR student checkpoint (set train.warm_start_encoder = false to skip)".into(),
        ));
    }
    Ok(())
}

/// Teacher-forced objective of the Standard and KD+ baselines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TeacherForced {
    /// Label-smoothed cross-entropy on references.
    SmoothedCe(f64),
    /// Cross-entropy against the expert distribution on reference prefixes.
    Kd(OracleInput),
}

/// Teacher-forced training with the same example order and batching as
/// [`dagger_train`], one pass per iteration.
#[allow(clippy::too_many_arguments)]
pub fn teacher_forced_train<P: Trainable, E: Policy>(
    student: &mut P,
    expert: Option<&E>,
    train: &[ParallelExample],
    dev: &[ParallelExample],
    objective: TeacherForced,
    cfg: &IterationConfig,
    opt: &mut Optimizer,
    observer: &mut dyn Observer<P>,
) -> Result<Vec<IterationStats>> {
    cfg.validate()?;
    let chunks = iteration_chunks(train.len(), cfg.examples_per_iteration, cfg.iterations, cfg.seed);
    let mut stats = Vec::with_capacity(cfg.iterations);
    for (i, chunk) in (1..).zip(&chunks) {
        let snapshot = student.params().clone();
        let (mut loss_sum, mut batches, mut positions) = (0.0, 0usize, 0usize);
        for idx in chunk.chunks(cfg.batch_size) {
            let out = match objective {
                TeacherForced::SmoothedCe(eps) => {
                    let batch: Vec<(&[TokenId], &[TokenId])> = idx
                        .iter()
                        .map(|&k| (train[k].acoustic.ids(), train[k].translation.ids()))
                        .collect();
                    smoothed_ce_loss(student, &batch, eps)?
                }
                TeacherForced::Kd(input) => {
                    let expert = expert.ok_or_else(|| Error::Config("KD needs an expert".into()))?;
                    let mut dists = Vec::with_capacity(idx.len());
                    for &k in idx {
                        let ex = &train[k];
                        let src = ex
                            .expert_input(input == OracleInput::Synthetic)
                            .ok_or_else(|| Error::Config("synthetic transcripts missing".into()))?;
                        let y = ex.translation.ids();
                        let q: Vec<Vec<f64>> = oracle_corrections(expert, src.ids(), &y[..y.len() - 1])?
                            .into_iter()
                            .map(|(_, o)| o.probs())
                            .collect();
                        dists.push(q);
                    }
                    let items: Vec<KdItem<'_>> = idx
                        .iter()
                        .zip(&dists)
                        .map(|(&k, q)| KdItem {
                            source: train[k].acoustic.ids(),
                            target: train[k].translation.ids(),
                            expert: q,
                        })
                        .collect();
                    kd_plus_loss(student, &items)?
                }
            };
            step(student, &out, opt, &snapshot)?;
            loss_sum += out.loss;
            batches += 1;
            positions += out.positions;
        }
        let s = IterationStats {
            iter: i,
            beta: 1.0,
            loss: if batches > 0 { loss_sum / batches as f64 } else { 0.0 },
            dev_bleu: dev_bleu(student, dev, cfg.dev_beam)?,
            records: positions,
        };
        log::info!("teacher-forced iter {i}: loss {:.5} dev BLEU {:.2}", s.loss, s.dev_bleu);
        observer.iteration_end(&s, student)?;
        stats.push(s);
    }
    Ok(stats)
}

/// Forwards to an inner observer and keeps the parameters of the last `n`
/// iterations.
struct Averager<'a> {
    inner: &'a mut dyn Observer<NeuralSeq2SeqPolicy>,
    keep: usize,
    last: Vec<NeuralSeq2SeqPolicy>,
}

impl Observer<NeuralSeq2SeqPolicy> for Averager<'_> {
    fn dagger_records(&mut self, iter: usize, records: &[crate::policy::DaggerRecord]) -> Result<()> {
        self.inner.dagger_records(iter, records)
    }
    fn aggrevate_records(&mut self, iter: usize, records: &[crate::policy::AggrevateRecord]) -> Result<()> {
        self.inner.aggrevate_records(iter, records)
    }
    fn iteration_end(&mut self, stats: &IterationStats, student: &NeuralSeq2SeqPolicy) -> Result<()> {
        if self.keep > 0 {
            if self.last.len() == self.keep {
                self.last.remove(0);
            }
            self.last.push(student.clone());
        }
        self.inner.iteration_end(stats, student)
    }
}

/// Trains one variant. Prerequisites are checked before any data is
/// touched; the AST student's encoder is copied from the ASR student when
/// configured, and AggreVaTe fine-tunes the warm-start student.
pub fn train_variant(
    cfg: &VariantConfig,
    train: &mut [ParallelExample],
    dev: &[ParallelExample],
    vocabs: &Vocabularies,
    pre: &Prerequisites<'_>,
    observer: &mut dyn Observer<NeuralSeq2SeqPolicy>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_prerequisites(cfg, pre)?;
    if train.is_empty() {
        return Err(Error::Data("no training examples".into()));
    }
    let v = cfg.variant;
    let mut student = match (v, pre.warm_start) {
        (Variant::Aggrevate, Some(w)) => w.clone(),
        _ => {
            let mut s = fresh_model(cfg.dims, &vocabs.acoustic, &vocabs.target, derive_seed(cfg.seed, 0x5714))?;
            if cfg.warm_start_encoder {
                warm_start_encoder(&mut s, pre.asr.expect("checked above"))?;
            }
            s
        }
    };
    let mut opt = Optimizer::new(cfg.optimizer)?;
    let it = cfg.iteration_for_variant();
    let schedule = cfg.schedule();
    let mut avg = Averager {
        inner: observer,
        keep: if v == Variant::Aggrevate { 0 } else { cfg.average_last },
        last: Vec::new(),
    };
    if v == Variant::Aggrevate && cfg.average_last > 0 {
        log::warn!("checkpoint averaging ignored for aggrevate (best dev epoch is kept)");
    }
    let stats = match v {
        Variant::Standard => teacher_forced_train(
            &mut student,
            None::<&NeuralSeq2SeqPolicy>,
            train,
            dev,
            TeacherForced::SmoothedCe(LABEL_SMOOTHING),
            &it,
            &mut opt,
            &mut avg,
        )?,
        Variant::KdPlus | Variant::SynthkdPlus => {
            let input = v.oracle_input().expect("KD variants query the expert");
            if input == OracleInput::Synthetic {
                attach_synthetic(train, pre.asr.expect("checked above"), it.asr_beam)?;
            }
            teacher_forced_train(&mut student, pre.expert, train, dev, TeacherForced::Kd(input), &it, &mut opt, &mut avg)?
        }
        Variant::Ikd | Variant::IkdPlus | Variant::Synthikd | Variant::SynthikdPlus => dagger_train(
            &mut student,
            pre.expert.expect("checked above"),
            pre.asr,
            train,
            dev,
            &schedule,
            &it,
            &mut opt,
            &mut avg,
        )?,
        Variant::Aggrevate => aggrevate_train(
            &mut student,
            pre.expert.expect("checked above"),
            pre.asr,
            train,
            dev,
            &schedule,
            &it,
            &mut opt,
            &mut avg,
        )?,
    };
    if avg.last.len() > 1 {
        student = average_models(&avg.last)?;
    }
    Ok(TrainOutcome {
        student,
        optimizer: opt,
        stats,
    })
}
