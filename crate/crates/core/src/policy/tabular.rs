use std::collections::HashMap;

use super::{check_ids, Params, Policy, Trainable};
use crate::corpus::TokenId;
use crate::{Error, Result};

/// Explicit probability table keyed by (source, prefix) with fallbacks to
/// prefix-only rows and a default row. Used as an exact test oracle.
#[derive(Clone, Debug)]
pub struct TabularPolicy {
    vocab: usize,
    source_vocab: usize,
    /// Logit rows.
    rows: HashMap<(Option<Vec<TokenId>>, Vec<TokenId>), Vec<f64>>,
    default: Vec<f64>,
    empty: Params,
}

#[derive(Clone, Debug)]
pub struct TabularState {
    source: Vec<TokenId>,
    prefix: Vec<TokenId>,
    logits: Vec<f64>,
}

fn to_logits(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect()
}

fn check_row(p: &[f64], vocab: usize) -> Result<()> {
    if p.len() != vocab || p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Usage("table row must be a distribution over the vocabulary".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::Usage(format!("table row sums to {s}")));
    }
    Ok(())
}

impl TabularPolicy {
    pub fn uniform(vocab: usize, source_vocab: usize) -> Self {
        Self {
            vocab,
            source_vocab,
            rows: HashMap::new(),
            default: vec![-(vocab as f64).ln(); vocab],
            empty: Params::default(),
        }
    }

    pub fn with_default(mut self, probs: Vec<f64>) -> Result<Self> {
        check_row(&probs, self.vocab)?;
        self.default = to_logits(&probs);
        Ok(self)
    }

    /// Default row given as raw logits (the distribution is their softmax).
    pub fn with_default_logits(mut self, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != self.vocab {
            return Err(Error::Usage("logit row must cover the vocabulary".into()));
        }
        self.default = logits;
        Ok(self)
    }

    /// Row used for `prefix` under any source.
    pub fn set(&mut self, prefix: &[TokenId], probs: Vec<f64>) -> Result<()> {
        check_row(&probs, self.vocab)?;
        self.rows.insert((None, prefix.to_vec()), to_logits(&probs));
        Ok(())
    }

    /// Row used for `prefix` under one specific source.
    pub fn set_for(&mut self, source: &[TokenId], prefix: &[TokenId], probs: Vec<f64>) -> Result<()> {
        check_row(&probs, self.vocab)?;
        self.rows.insert((Some(source.to_vec()), prefix.to_vec()), to_logits(&probs));
        Ok(())
    }

    /// Logit row for `prefix` under `source`.
    pub fn row(&self, source: &[TokenId], prefix: &[TokenId]) -> &[f64] {
        self.rows
            .get(&(Some(source.to_vec()), prefix.to_vec()))
            .or_else(|| self.rows.get(&(None, prefix.to_vec())))
            .unwrap_or(&self.default)
    }

    fn state(&self, source: Vec<TokenId>, prefix: Vec<TokenId>) -> TabularState {
        let logits = self.row(&source, &prefix).to_vec();
        TabularState { source, prefix, logits }
    }
}

impl Policy for TabularPolicy {
    type State = TabularState;

    fn source_vocab_size(&self) -> usize {
        self.source_vocab
    }

    fn target_vocab_size(&self) -> usize {
        self.vocab
    }

    fn start(&self, source: &[TokenId]) -> Result<TabularState> {
        self.check_source(source)?;
        Ok(self.state(source.to_vec(), Vec::new()))
    }

    fn logits<'s>(&self, state: &'s TabularState) -> &'s [f64] {
        &state.logits
    }

    fn advance(&self, state: &TabularState, token: TokenId) -> TabularState {
        let mut prefix = state.prefix.clone();
        prefix.push(token);
        self.state(state.source.clone(), prefix)
    }
}

impl Trainable for TabularPolicy {
    type Tape = ();

    fn params(&self) -> &Params {
        &self.empty
    }

    fn params_mut(&mut self) -> &mut Params {
        &mut self.empty
    }

    fn forward(&self, source: &[TokenId], prefix: &[TokenId]) -> Result<(Vec<Vec<f64>>, ())> {
        self.check_source(source)?;
        check_ids(prefix, self.vocab, "prefix")?;
        let rows = (0..=prefix.len())
            .map(|t| self.row(source, &prefix[..t]).to_vec())
            .collect();
        Ok((rows, ()))
    }

    fn backward(&self, _: &(), _: &[Vec<f64>], _: &mut Params) {}
}
