use std::hash::Hash;

use super::bleu::sentence_bleu;
use super::edit::ter;
use crate::{Error, Result};

fn check_prefix<T: PartialEq>(prefix: &[T], full: &[T]) -> Result<()> {
    if prefix.len() > full.len() || prefix != &full[..prefix.len()] {
        return Err(Error::Usage("reward-to-go prefix is not a prefix of the full sequence".into()));
    }
    Ok(())
}

/// Sentence-BLEU of the completed sequence minus that of its prefix.
pub fn bleu_reward_to_go<T: Eq + Hash>(prefix: &[T], full: &[T], reference: &[T]) -> Result<f64> {
    check_prefix(prefix, full)?;
    Ok(sentence_bleu(full, reference)? - sentence_bleu(prefix, reference)?)
}

/// TER quality `100 * max(0, 1 - TER)`.
pub fn ter_quality<T: PartialEq + Clone>(hyp: &[T], reference: &[T]) -> Result<f64> {
    Ok(100.0 * (1.0 - ter(hyp, reference)?).max(0.0))
}

/// TER counterpart of [`bleu_reward_to_go`] built on [`ter_quality`].
pub fn ter_reward_to_go<T: PartialEq + Clone>(prefix: &[T], full: &[T], reference: &[T]) -> Result<f64> {
    check_prefix(prefix, full)?;
    Ok(ter_quality(full, reference)? - ter_quality(prefix, reference)?)
}
