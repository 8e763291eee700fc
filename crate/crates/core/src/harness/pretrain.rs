use super::config::{ModelDims, PretrainConfig};
use crate::corpus::{ParallelExample, TokenId, Vocabularies, Vocabulary};
use crate::decode::{beam_decode, greedy_decode, DecodeConfig};
use crate::imitation::{iteration_chunks, step};
use crate::metrics::{wer_summary, EditSummary};
use crate::policy::{
    ikd_loss, smoothed_ce_loss, DaggerRecord, DaggerTarget, NeuralSeq2SeqPolicy, Optimizer, Policy, Seq2SeqConfig,
    Trainable,
};
use crate::rng::{derive_seed, rng_for};
use crate::{Error, Result};
use rand::Rng;
use std::sync::Arc;

/// Dev metric after one pretraining epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    /// Greedy sentence accuracy (expert) or corpus WER (ASR).
    pub metric: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpertReport {
    pub dev_accuracy: f64,
    pub history: Vec<EpochRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsrReport {
    pub dev_wer: f64,
    pub test_wer: f64,
    pub in_band: bool,
    pub history: Vec<EpochRecord>,
}

pub fn fresh_model(dims: ModelDims, source: &Vocabulary, target: &Vocabulary, seed: u64) -> Result<NeuralSeq2SeqPolicy> {
    let cfg = Seq2SeqConfig::new(source.len(), target.len()).with_dims(dims.emb_dim, dims.hidden_dim);
    Ok(NeuralSeq2SeqPolicy::new(cfg, seed)?.with_vocab_hashes(source.hash(), target.hash()))
}

/// One pass of label-smoothed cross-entropy over the examples in `order`,
/// `batch_size` pairs per update. Returns the mean batch loss.
pub fn ce_pass<P: Trainable>(
    model: &mut P,
    pairs: &[(&[TokenId], &[TokenId])],
    order: &[usize],
    batch_size: usize,
    epsilon: f64,
    opt: &mut Optimizer,
) -> Result<f64> {
    let snapshot = model.params().clone();
    let (mut sum, mut n) = (0.0, 0usize);
    for idx in order.chunks(batch_size) {
        let batch: Vec<(&[TokenId], &[TokenId])> = idx.iter().map(|&i| pairs[i]).collect();
        let out = smoothed_ce_loss(model, &batch, epsilon)?;
        step(model, &out, opt, &snapshot)?;
        sum += out.loss;
        n += 1;
    }
    Ok(if n > 0 { sum / n as f64 } else { 0.0 })
}

/// Like [`ce_pass`] but each decoder input token is replaced by a random
/// content token with probability `rate`, while the targets stay the
/// reference tokens. Trains the model to keep translating after its prefix
/// went wrong.
pub fn noisy_prefix_pass<P: Trainable>(
    model: &mut P,
    pairs: &[(&[TokenId], &[TokenId])],
    order: &[usize],
    batch_size: usize,
    rate: f64,
    seed: u64,
    opt: &mut Optimizer,
) -> Result<f64> {
    let snapshot = model.params().clone();
    let vocab = model.target_vocab_size() as TokenId;
    let (mut sum, mut n) = (0.0, 0usize);
    for idx in order.chunks(batch_size) {
        let mut records = Vec::new();
        for &i in idx {
            let (src, tgt) = pairs[i];
            let mut r = rng_for(seed, i as u64);
            let noisy: Vec<TokenId> = tgt[..tgt.len() - 1]
                .iter()
                .map(|&t| if r.gen::<f64>() < rate { r.gen_range(crate::corpus::RESERVED as TokenId..vocab) } else { t })
                .collect();
            let src = Arc::new(src.to_vec());
            for (t, &tok) in tgt.iter().enumerate() {
                records.push(DaggerRecord {
                    prefix: noisy[..t].to_vec(),
                    student_input: Arc::clone(&src),
                    expert_input: Arc::clone(&src),
                    target: DaggerTarget::Token(tok),
                });
            }
        }
        let out = ikd_loss(model, &records)?;
        step(model, &out, opt, &snapshot)?;
        sum += out.loss;
        n += 1;
    }
    Ok(if n > 0 { sum / n as f64 } else { 0.0 })
}

/// Fraction of examples whose greedy decode reproduces the target exactly.
pub fn sentence_accuracy<P: Policy>(model: &P, pairs: &[(&[TokenId], &[TokenId])]) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let cfg = DecodeConfig::greedy();
    let mut hits = 0usize;
    for (src, tgt) in pairs {
        if greedy_decode(model, src, &cfg)?.tokens == *tgt {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

/// Corpus WER (pooled edits over pooled reference length) of beam decodes.
pub fn corpus_wer<P: Policy>(model: &P, pairs: &[(&[TokenId], &[TokenId])], beam: usize) -> Result<f64> {
    let cfg = DecodeConfig::beam(beam);
    let mut total = EditSummary::default();
    for (src, tgt) in pairs {
        let h = beam_decode(model, src, &cfg)?;
        total.add(&wer_summary(h.body(), &tgt[..tgt.len() - 1])?);
    }
    Ok(total.rate())
}

fn transcript_pairs(examples: &[ParallelExample]) -> Vec<(&[TokenId], &[TokenId])> {
    examples.iter().map(|e| (e.transcript.ids(), e.translation.ids())).collect()
}

fn acoustic_pairs(examples: &[ParallelExample]) -> Vec<(&[TokenId], &[TokenId])> {
    examples.iter().map(|e| (e.acoustic.ids(), e.transcript.ids())).collect()
}

/// Trains the expert on clean (x_s, y) pairs until its dev greedy sentence
/// accuracy reaches the target, failing once the epoch budget is spent.
pub fn pretrain_expert(
    train: &[ParallelExample],
    dev: &[ParallelExample],
    vocabs: &Vocabularies,
    cfg: &PretrainConfig,
    seed: u64,
) -> Result<(NeuralSeq2SeqPolicy, ExpertReport)> {
    if train.is_empty() {
        return Err(Error::Data("expert pretraining needs training data".into()));
    }
    let mut model = fresh_model(cfg.dims, &vocabs.source, &vocabs.target, derive_seed(seed, 0xe1))?;
    let mut opt = Optimizer::new(cfg.optimizer)?;
    let pairs = transcript_pairs(train);
    let dev_pairs = transcript_pairs(dev);
    let chunks = iteration_chunks(pairs.len(), 0, cfg.epochs, derive_seed(seed, 0xe2));
    let mut history = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for (epoch, order) in (1..).zip(&chunks) {
        let loss = ce_pass(&mut model, &pairs, order, cfg.batch_size, cfg.label_smoothing, &mut opt)?;
        if cfg.prefix_noise > 0.0 {
            let s = derive_seed(seed, 0xe3 << 32 | epoch as u64);
            noisy_prefix_pass(&mut model, &pairs, order, cfg.batch_size, cfg.prefix_noise, s, &mut opt)?;
        }
        let acc = sentence_accuracy(&model, &dev_pairs)?;
        log::info!("expert epoch {epoch}: loss {loss:.5} dev accuracy {acc:.4}");
        history.push(EpochRecord {
            epoch,
            loss,
            metric: acc,
        });
        if acc <= best {
            opt.config.learning_rate *= cfg.plateau_decay;
            log::info!("expert learning rate now {:e}", opt.config.learning_rate);
        }
        best = best.max(acc);
        if acc >= cfg.target_accuracy && epoch >= cfg.min_epochs {
            return Ok((
                model,
                ExpertReport {
                    dev_accuracy: acc,
                    history,
                },
            ));
        }
    }
    let trace: Vec<String> = history.iter().map(|h| format!("{}:{:.4}", h.epoch, h.metric)).collect();
    Err(Error::Training(format!(
        "expert dev accuracy stayed below {} after {} epochs (epoch:accuracy {})",
        cfg.target_accuracy,
        cfg.epochs,
        trace.join(" ")
    )))
}

/// Trains the ASR student on (x_a, x_s) pairs for the configured epochs and
/// reports corpus WER on dev and test. A WER outside the band only warns.
pub fn pretrain_asr(
    train: &[ParallelExample],
    dev: &[ParallelExample],
    test: &[ParallelExample],
    vocabs: &Vocabularies,
    cfg: &PretrainConfig,
    seed: u64,
) -> Result<(NeuralSeq2SeqPolicy, AsrReport)> {
    if train.is_empty() {
        return Err(Error::Data("ASR pretraining needs training data".into()));
    }
    let mut model = fresh_model(cfg.dims, &vocabs.acoustic, &vocabs.source, derive_seed(seed, 0xa1))?;
    let mut opt = Optimizer::new(cfg.optimizer)?;
    let pairs = acoustic_pairs(train);
    let chunks = iteration_chunks(pairs.len(), 0, cfg.epochs, derive_seed(seed, 0xa2));
    let mut history = Vec::new();
    for (epoch, order) in (1..).zip(&chunks) {
        let loss = ce_pass(&mut model, &pairs, order, cfg.batch_size, cfg.label_smoothing, &mut opt)?;
        log::info!("asr epoch {epoch}: loss {loss:.5}");
        history.push(EpochRecord {
            epoch,
            loss,
            metric: f64::NAN,
        });
    }
    let dev_wer = corpus_wer(&model, &acoustic_pairs(dev), cfg.eval_beam)?;
    let test_wer = corpus_wer(&model, &acoustic_pairs(test), cfg.eval_beam)?;
    if let Some(last) = history.last_mut() {
        last.metric = dev_wer;
    }
    let [lo, hi] = cfg.wer_band;
    let in_band = (lo..=hi).contains(&dev_wer);
    if !in_band {
        log::warn!("ASR dev WER {dev_wer:.4} outside calibration band [{lo}, {hi}]");
    }
    Ok((
        model,
        AsrReport {
            dev_wer,
            test_wer,
            in_band,
            history,
        },
    ))
}
