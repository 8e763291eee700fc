use rand::Rng;

use super::bleu::BleuStats;
use super::edit::EditSummary;
use crate::rng::rng;
use crate::{Error, Result};

/// Per-sentence statistics that pool into a corpus-level score.
pub trait CorpusStatistic: Clone + Default {
    fn accumulate(&mut self, other: &Self);
    fn corpus_score(&self) -> f64;
}

impl CorpusStatistic for BleuStats {
    fn accumulate(&mut self, other: &Self) {
        self.add(other);
    }
    fn corpus_score(&self) -> f64 {
        self.score()
    }
}

impl CorpusStatistic for EditSummary {
    fn accumulate(&mut self, other: &Self) {
        self.add(other);
    }
    fn corpus_score(&self) -> f64 {
        100.0 * self.rate()
    }
}

fn pooled<S: CorpusStatistic>(xs: &[S]) -> S {
    let mut total = S::default();
    xs.iter().for_each(|x| total.accumulate(x));
    total
}

pub const DEFAULT_TRIALS: usize = 10_000;

/// Paired approximate randomization: each trial swaps every sentence pair
/// with probability 1/2 and recomputes both corpus scores. Returns
/// `(hits + 1) / (trials + 1)` where a hit is a trial whose absolute score
/// difference reaches the observed one.
pub fn paired_randomization_test<S: CorpusStatistic>(
    a: &[S],
    b: &[S],
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!(
            "paired test needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if trials < 1000 {
        return Err(Error::Usage("paired test needs at least 1000 trials".into()));
    }
    let observed = (pooled(a).corpus_score() - pooled(b).corpus_score()).abs();
    let mut r = rng(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut sa = S::default();
        let mut sb = S::default();
        for (x, y) in a.iter().zip(b) {
            if r.gen::<bool>() {
                sa.accumulate(y);
                sb.accumulate(x);
            } else {
                sa.accumulate(x);
                sb.accumulate(y);
            }
        }
        let diff = (sa.corpus_score() - sb.corpus_score()).abs();
        // tolerance absorbs summation-order noise in float scores
        if diff >= observed - 1e-9 {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (trials + 1) as f64)
}
