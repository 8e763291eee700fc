//! Conditional next-token policies and everything needed to train them:
//! losses with analytic gradients, Adam updates, checkpoints and a
//! finite-difference gradient checker.

mod checkpoint;
mod gradcheck;
pub mod linalg;
mod loss;
mod optim;
mod params;
mod seq2seq;
mod tabular;

pub use checkpoint::{
    average_checkpoints, average_models, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint,
    Checkpoint, FORMAT_VERSION,
};
pub use gradcheck::gradient_check;
pub use loss::{
    aggrevate_loss, ikd_loss, ikd_plus_loss, kd_plus_loss, smoothed_ce_loss, AggrevateRecord,
    DaggerRecord, DaggerTarget, KdItem, LossOutput, LABEL_SMOOTHING,
};
pub use optim::{apply_update, Optimizer, OptimizerConfig};
pub use params::{Params, Tensor};
pub use seq2seq::{warm_start_encoder, NeuralSeq2SeqPolicy, Seq2SeqConfig, ENCODER_BLOCKS};
pub use tabular::TabularPolicy;

use crate::corpus::{TokenId, T_MAX};
use crate::{Error, Result};

/// Logits over the target vocabulary and their log-softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput {
    pub logits: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl PolicyOutput {
    pub fn from_logits(logits: Vec<f64>) -> Self {
        let log_probs = linalg::log_softmax(&logits);
        Self { logits, log_probs }
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    /// Highest-probability token; ties go to the lowest index.
    pub fn argmax(&self) -> TokenId {
        argmax(&self.log_probs)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(xs: &[f64]) -> TokenId {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best as TokenId
}

/// Autoregressive policy π(v | prefix; source), evaluated incrementally.
pub trait Policy {
    /// Decoder state after some prefix; cheap to clone for beam search.
    type State: Clone;

    fn source_vocab_size(&self) -> usize;
    fn target_vocab_size(&self) -> usize;

    /// State after the begin-of-sequence marker.
    fn start(&self, source: &[TokenId]) -> Result<Self::State>;
    /// Logits of the next-token distribution in `state`.
    fn logits<'s>(&self, state: &'s Self::State) -> &'s [f64];
    /// State after appending `token`.
    fn advance(&self, state: &Self::State, token: TokenId) -> Self::State;

    fn check_source(&self, source: &[TokenId]) -> Result<()> {
        if source.is_empty() {
            return Err(Error::Usage("empty source sequence".into()));
        }
        check_ids(source, self.source_vocab_size(), "source")
    }
}

pub(crate) fn check_ids(ids: &[TokenId], vocab: usize, what: &str) -> Result<()> {
    match ids.iter().find(|&&t| t as usize >= vocab) {
        Some(t) => Err(Error::Usage(format!(
            "{what} token {t} outside vocabulary of size {vocab}"
        ))),
        None => Ok(()),
    }
}

/// π(· | prefix; source) as a [`PolicyOutput`].
pub fn next_token_distribution<P: Policy>(
    policy: &P,
    source: &[TokenId],
    prefix: &[TokenId],
) -> Result<PolicyOutput> {
    if prefix.len() >= T_MAX {
        return Err(Error::Usage(format!("prefix length {} reaches T_max", prefix.len())));
    }
    check_ids(prefix, policy.target_vocab_size(), "prefix")?;
    let mut state = policy.start(source)?;
    for &t in prefix {
        state = policy.advance(&state, t);
    }
    Ok(PolicyOutput::from_logits(policy.logits(&state).to_vec()))
}

/// Outputs after every prefix of `seq`: entry `t` conditions on `seq[..t]`,
/// for `t` in `0..=seq.len()`.
pub fn prefix_outputs<P: Policy>(policy: &P, source: &[TokenId], seq: &[TokenId]) -> Result<Vec<PolicyOutput>> {
    check_ids(seq, policy.target_vocab_size(), "prefix")?;
    let mut state = policy.start(source)?;
    let mut out = Vec::with_capacity(seq.len() + 1);
    out.push(PolicyOutput::from_logits(policy.logits(&state).to_vec()));
    for &t in seq {
        state = policy.advance(&state, t);
        out.push(PolicyOutput::from_logits(policy.logits(&state).to_vec()));
    }
    Ok(out)
}

/// A policy with parameters and teacher-forced backpropagation.
pub trait Trainable: Policy + Clone {
    type Tape;

    fn params(&self) -> &Params;
    fn params_mut(&mut self) -> &mut Params;

    /// Logits after every prefix of `prefix` (`prefix.len() + 1` rows).
    fn forward(&self, source: &[TokenId], prefix: &[TokenId]) -> Result<(Vec<Vec<f64>>, Self::Tape)>;

    /// Accumulates parameter gradients given d(loss)/d(logits) per row.
    fn backward(&self, tape: &Self::Tape, dlogits: &[Vec<f64>], grads: &mut Params);
}
