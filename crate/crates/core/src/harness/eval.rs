use crate::corpus::{ParallelExample, TokenId, Vocabularies};
use crate::decode::{decode_all, DecodeConfig};
use crate::metrics::{ter_summary, wer_summary, BleuStats, EditSummary};
use crate::policy::{NeuralSeq2SeqPolicy, Policy};
use crate::{Error, Result};

/// Which side of an example a model reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputChannel {
    Acoustic,
    Transcript,
    Synthetic,
}

/// Which side of an example a model is scored against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputChannel {
    Translation,
    Transcript,
}

pub fn input_of(ex: &ParallelExample, channel: InputChannel) -> Result<&[TokenId]> {
    match channel {
        InputChannel::Acoustic => Ok(ex.acoustic.ids()),
        InputChannel::Transcript => Ok(ex.transcript.ids()),
        InputChannel::Synthetic => ex
            .synthetic
            .as_ref()
            .map(|s| s.ids())
            .ok_or_else(|| Error::Data("example lacks a synthetic transcript".into())),
    }
}

pub fn reference_of(ex: &ParallelExample, channel: OutputChannel) -> &[TokenId] {
    match channel {
        OutputChannel::Translation => ex.translation.body(),
        OutputChannel::Transcript => ex.transcript.body(),
    }
}

/// Corpus scores of a set of hypotheses with the per-sentence statistics
/// kept for significance testing.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub bleu: f64,
    /// Corpus TER in [0, ∞): pooled edits and shifts over pooled reference length.
    pub ter: f64,
    pub wer: f64,
    pub hypotheses: Vec<Vec<TokenId>>,
    pub sentence_stats: Vec<BleuStats>,
}

/// Scores hypothesis bodies against reference bodies.
pub fn score_hypotheses(hyps: Vec<Vec<TokenId>>, refs: &[&[TokenId]]) -> Result<Evaluation> {
    if hyps.len() != refs.len() {
        return Err(Error::Usage(format!("{} hypotheses for {} references", hyps.len(), refs.len())));
    }
    if hyps.is_empty() {
        return Err(Error::Data("nothing to evaluate".into()));
    }
    let mut bleu = BleuStats::default();
    let mut ter = EditSummary::default();
    let mut wer = EditSummary::default();
    let mut sentence_stats = Vec::with_capacity(hyps.len());
    for (h, r) in hyps.iter().zip(refs) {
        let s = BleuStats::from_pair(h, r);
        bleu.add(&s);
        sentence_stats.push(s);
        ter.add(&ter_summary(h, r)?);
        wer.add(&wer_summary(h, r)?);
    }
    Ok(Evaluation {
        bleu: bleu.score(),
        ter: ter.rate(),
        wer: wer.rate(),
        hypotheses: hyps,
        sentence_stats,
    })
}

/// Decodes every example's `input` side and scores against `output`.
pub fn evaluate<P: Policy>(
    model: &P,
    examples: &[ParallelExample],
    input: InputChannel,
    output: OutputChannel,
    decode: &DecodeConfig,
) -> Result<Evaluation> {
    let sources: Vec<&[TokenId]> = examples.iter().map(|e| input_of(e, input)).collect::<Result<_>>()?;
    let hyps: Vec<Vec<TokenId>> = decode_all(model, &sources, decode)?
        .into_iter()
        .map(|h| h.body().to_vec())
        .collect();
    let refs: Vec<&[TokenId]> = examples.iter().map(|e| reference_of(e, output)).collect();
    score_hypotheses(hyps, &refs)
}

/// Channels of a checkpoint, identified by its vocabulary hashes: students
/// read acoustic input, the expert reads transcripts, the ASR student
/// writes transcripts.
pub fn channels_of(model: &NeuralSeq2SeqPolicy, vocabs: &Vocabularies) -> Result<(InputChannel, OutputChannel)> {
    let src = &model.source_vocab_hash;
    let tgt = &model.target_vocab_hash;
    let input = if *src == vocabs.acoustic.hash() {
        InputChannel::Acoustic
    } else if *src == vocabs.source.hash() {
        InputChannel::Transcript
    } else {
        return Err(Error::Usage(format!(
            "checkpoint input vocabulary {src:?} matches no vocabulary of this corpus"
        )));
    };
    let output = if *tgt == vocabs.target.hash() {
        OutputChannel::Translation
    } else if *tgt == vocabs.source.hash() && input == InputChannel::Acoustic {
        OutputChannel::Transcript
    } else {
        return Err(Error::Usage(format!(
            "checkpoint output vocabulary {tgt:?} matches no vocabulary of this corpus"
        )));
    };
    Ok((input, output))
}

/// [`evaluate`] on the channels implied by the checkpoint's vocabularies.
pub fn evaluate_checkpoint(
    model: &NeuralSeq2SeqPolicy,
    examples: &[ParallelExample],
    vocabs: &Vocabularies,
    decode: &DecodeConfig,
) -> Result<Evaluation> {
    let (input, output) = channels_of(model, vocabs)?;
    evaluate(model, examples, input, output, decode)
}
