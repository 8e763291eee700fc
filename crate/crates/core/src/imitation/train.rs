use rand::seq::SliceRandom;

use super::collect::{collect_aggrevate, collect_dagger, IterationConfig, TargetMode};
use super::schedule::{beta_at, BetaSchedule};
use crate::corpus::ParallelExample;
use crate::decode::{beam_decode, DecodeConfig};
use crate::metrics::corpus_bleu;
use crate::policy::{
    aggrevate_loss, apply_update, ikd_loss, ikd_plus_loss, AggrevateRecord, DaggerRecord, LossOutput, Optimizer,
    Params, Policy, Trainable,
};
use crate::rng::{derive_seed, rng_for};
use crate::{Error, Result};

/// AggreVaTe epochs are capped at this many.
pub const MAX_AGGREVATE_EPOCHS: usize = 50;

/// One row of the per-iteration statistics table.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationStats {
    pub iter: usize,
    pub beta: f64,
    /// Mean of the batch losses.
    pub loss: f64,
    pub dev_bleu: f64,
    pub records: usize,
}

/// TSV with header `iter beta loss dev_bleu records`.
pub fn render_stats(stats: &[IterationStats]) -> String {
    let mut out = String::from("iter\tbeta\tloss\tdev_bleu\trecords\n");
    for s in stats {
        out.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.4}\t{}\n",
            s.iter, s.beta, s.loss, s.dev_bleu, s.records
        ));
    }
    out
}

/// Callbacks fired during training; every method defaults to a no-op.
pub trait Observer<P> {
    fn dagger_records(&mut self, _iter: usize, _records: &[DaggerRecord]) -> Result<()> {
        Ok(())
    }
    fn aggrevate_records(&mut self, _iter: usize, _records: &[AggrevateRecord]) -> Result<()> {
        Ok(())
    }
    fn iteration_end(&mut self, _stats: &IterationStats, _student: &P) -> Result<()> {
        Ok(())
    }
}

impl<P> Observer<P> for () {}

/// Training-example indices visited at each 1-based iteration: consecutive
/// slices of a stream of seeded per-epoch permutations.
pub fn iteration_chunks(n: usize, per_iteration: usize, iterations: usize, seed: u64) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new(); iterations];
    }
    let per = if per_iteration == 0 { n } else { per_iteration };
    let mut chunks = Vec::with_capacity(iterations);
    let mut epoch = 0u64;
    let mut perm: Vec<usize> = Vec::new();
    let mut pos = 0;
    for _ in 0..iterations {
        let mut chunk = Vec::with_capacity(per);
        while chunk.len() < per {
            if pos == perm.len() {
                perm = (0..n).collect();
                perm.shuffle(&mut rng_for(seed, epoch));
                epoch += 1;
                pos = 0;
            }
            let take = (per - chunk.len()).min(perm.len() - pos);
            chunk.extend_from_slice(&perm[pos..pos + take]);
            pos += take;
        }
        chunks.push(chunk);
    }
    chunks
}

/// Corpus BLEU of the student's decodes of the acoustic inputs.
pub fn dev_bleu<P: Policy>(student: &P, dev: &[ParallelExample], beam: usize) -> Result<f64> {
    if dev.is_empty() {
        return Ok(0.0);
    }
    let cfg = DecodeConfig::beam(beam);
    let mut hyps = Vec::with_capacity(dev.len());
    for ex in dev {
        hyps.push(beam_decode(student, ex.acoustic.ids(), &cfg)?.body().to_vec());
    }
    let refs: Vec<&[u32]> = dev.iter().map(|e| e.translation.body()).collect();
    corpus_bleu(&hyps, &refs)
}

/// One optimizer step on `loss`; restores `snapshot` and fails on divergence.
pub fn step<P: Trainable>(student: &mut P, out: &LossOutput, opt: &mut Optimizer, snapshot: &Params) -> Result<()> {
    let result = if out.loss.is_finite() {
        apply_update(student, &out.grads, opt).map(|_| ())
    } else {
        Err(Error::Training(format!("non-finite loss {}", out.loss)))
    };
    if result.is_err() {
        *student.params_mut() = snapshot.clone();
    }
    result
}

fn gather(train: &mut [ParallelExample], idx: &[usize]) -> Vec<ParallelExample> {
    idx.iter().map(|&i| train[i].clone()).collect()
}

fn write_back(train: &mut [ParallelExample], idx: &[usize], batch: Vec<ParallelExample>) {
    for (&i, ex) in idx.iter().zip(batch) {
        if train[i].synthetic.is_none() {
            train[i].synthetic = ex.synthetic;
        }
    }
}

/// Dagger with per-iteration datasets. At iteration `i` the student
/// snapshot taken at the start of the iteration rolls in with β(i), the
/// expert labels every visited prefix, and one pass of updates over D_i
/// follows in batches of `batch_size` examples. On divergence the student
/// is restored to the start of the failing iteration.
#[allow(clippy::too_many_arguments)]
pub fn dagger_train<P: Trainable, E: Policy, A: Policy>(
    student: &mut P,
    expert: &E,
    asr: Option<&A>,
    train: &mut [ParallelExample],
    dev: &[ParallelExample],
    schedule: &BetaSchedule,
    cfg: &IterationConfig,
    opt: &mut Optimizer,
    observer: &mut dyn Observer<P>,
) -> Result<Vec<IterationStats>> {
    cfg.validate()?;
    schedule.validate()?;
    let chunks = iteration_chunks(train.len(), cfg.examples_per_iteration, cfg.iterations, cfg.seed);
    let mut stats = Vec::with_capacity(cfg.iterations);
    for (i, chunk) in (1..).zip(&chunks) {
        let beta = beta_at(schedule, i);
        let snapshot = student.clone();
        let iter_seed = derive_seed(cfg.seed, 1 << 32 | i as u64);
        let (mut loss_sum, mut batches, mut records) = (0.0, 0usize, 0usize);
        for idx in chunk.chunks(cfg.batch_size) {
            let mut batch = gather(train, idx);
            let mut recs = Vec::new();
            for (k, ex) in batch.iter_mut().enumerate() {
                recs.extend(collect_dagger(
                    std::slice::from_mut(ex),
                    &snapshot,
                    expert,
                    asr,
                    cfg,
                    beta,
                    iter_seed,
                    idx[k] as u64,
                )?);
            }
            write_back(train, idx, batch);
            observer.dagger_records(i, &recs)?;
            let out = match cfg.target_mode {
                TargetMode::Argmax => ikd_loss(student, &recs)?,
                TargetMode::Distribution => ikd_plus_loss(student, &recs)?,
            };
            step(student, &out, opt, snapshot.params())?;
            loss_sum += out.loss;
            batches += 1;
            records += recs.len();
        }
        let s = IterationStats {
            iter: i,
            beta,
            loss: if batches > 0 { loss_sum / batches as f64 } else { 0.0 },
            dev_bleu: dev_bleu(student, dev, cfg.dev_beam)?,
            records,
        };
        log::info!("dagger iter {i}: beta {beta:.4} loss {:.5} dev BLEU {:.2} records {records}", s.loss, s.dev_bleu);
        observer.iteration_end(&s, student)?;
        stats.push(s);
    }
    Ok(stats)
}

/// AggreVaTe fine-tuning from a warm-started student: per epoch, one record
/// per visited example, square loss on σ(Q), dev BLEU after the epoch.
/// Stops once dev BLEU has not improved for more than `patience` epochs and
/// leaves the best-dev parameters in `student`; the warm start counts as a
/// candidate.
#[allow(clippy::too_many_arguments)]
pub fn aggrevate_train<P: Trainable, E: Policy, A: Policy>(
    student: &mut P,
    expert: &E,
    asr: Option<&A>,
    train: &mut [ParallelExample],
    dev: &[ParallelExample],
    schedule: &BetaSchedule,
    cfg: &IterationConfig,
    opt: &mut Optimizer,
    observer: &mut dyn Observer<P>,
) -> Result<Vec<IterationStats>> {
    cfg.validate()?;
    schedule.validate()?;
    if cfg.iterations > MAX_AGGREVATE_EPOCHS {
        return Err(Error::Config(format!(
            "{} AggreVaTe epochs requested, at most {MAX_AGGREVATE_EPOCHS} allowed",
            cfg.iterations
        )));
    }
    let chunks = iteration_chunks(train.len(), cfg.examples_per_iteration, cfg.iterations, cfg.seed);
    let mut stats = Vec::new();
    let warm_bleu = dev_bleu(student, dev, cfg.dev_beam)?;
    log::info!("aggrevate warm start: dev BLEU {warm_bleu:.2}");
    let mut best = (warm_bleu, student.params().clone());
    let mut stale = 0;
    for (i, chunk) in (1..).zip(&chunks) {
        let beta = beta_at(schedule, i);
        let snapshot = student.clone();
        let iter_seed = derive_seed(cfg.seed, 2 << 32 | i as u64);
        let (mut loss_sum, mut batches, mut records) = (0.0, 0usize, 0usize);
        for idx in chunk.chunks(cfg.batch_size) {
            let mut batch = gather(train, idx);
            let mut recs = Vec::with_capacity(idx.len());
            for (k, ex) in batch.iter_mut().enumerate() {
                recs.extend(collect_aggrevate(
                    std::slice::from_mut(ex),
                    &snapshot,
                    expert,
                    asr,
                    cfg,
                    beta,
                    iter_seed,
                    idx[k] as u64,
                )?);
            }
            write_back(train, idx, batch);
            observer.aggrevate_records(i, &recs)?;
            let out = aggrevate_loss(student, &recs)?;
            step(student, &out, opt, snapshot.params())?;
            loss_sum += out.loss;
            batches += 1;
            records += recs.len();
        }
        let s = IterationStats {
            iter: i,
            beta,
            loss: if batches > 0 { loss_sum / batches as f64 } else { 0.0 },
            dev_bleu: dev_bleu(student, dev, cfg.dev_beam)?,
            records,
        };
        log::info!("aggrevate epoch {i}: beta {beta:.4} loss {:.5} dev BLEU {:.2}", s.loss, s.dev_bleu);
        observer.iteration_end(&s, student)?;
        let improved = s.dev_bleu > best.0;
        stats.push(s);
        if improved {
            best = (stats.last().unwrap().dev_bleu, student.params().clone());
            stale = 0;
        } else {
            stale += 1;
            if stale > cfg.patience {
                break;
            }
        }
    }
    *student.params_mut() = best.1;
    Ok(stats)
}
