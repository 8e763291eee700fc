use std::collections::HashMap;
use std::hash::Hash;

use crate::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Sufficient statistics for BLEU over one sentence or a whole corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn from_pair<T: Eq + Hash>(hyp: &[T], reference: &[T]) -> Self {
        let mut s = Self {
            hyp_len: hyp.len() as u64,
            ref_len: reference.len() as u64,
            ..Self::default()
        };
        for n in 1..=MAX_ORDER {
            if hyp.len() < n {
                continue;
            }
            let mut ref_counts: HashMap<&[T], u64> = HashMap::new();
            for g in reference.windows(n) {
                *ref_counts.entry(g).or_default() += 1;
            }
            let mut hyp_counts: HashMap<&[T], u64> = HashMap::new();
            for g in hyp.windows(n) {
                *hyp_counts.entry(g).or_default() += 1;
            }
            s.totals[n - 1] = (hyp.len() + 1 - n) as u64;
            s.matches[n - 1] = hyp_counts
                .iter()
                .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
                .sum();
        }
        s
    }

    pub fn add(&mut self, other: &Self) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    fn brevity_penalty(&self) -> f64 {
        (1.0 - self.ref_len as f64 / self.hyp_len as f64).min(0.0).exp()
    }

    /// Unsmoothed BLEU in [0, 100].
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches.iter().any(|&m| m == 0) {
            return 0.0;
        }
        let log_p: f64 = (0..MAX_ORDER)
            .map(|n| (self.matches[n] as f64 / self.totals[n] as f64).ln())
            .sum::<f64>()
            / MAX_ORDER as f64;
        100.0 * self.brevity_penalty() * log_p.exp()
    }

    /// Add-one smoothing on orders >= 2, applied only when some order has
    /// no match at all.
    pub fn smoothed_score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        if self.matches.iter().all(|&m| m > 0) {
            return self.score();
        }
        let mut log_p = (self.matches[0] as f64 / self.totals[0] as f64).ln();
        for n in 1..MAX_ORDER {
            log_p += ((self.matches[n] + 1) as f64 / (self.totals[n] + 1) as f64).ln();
        }
        100.0 * self.brevity_penalty() * (log_p / MAX_ORDER as f64).exp()
    }
}

pub fn corpus_stats<T: Eq + Hash, H: AsRef<[T]>, R: AsRef<[T]>>(hyps: &[H], refs: &[R]) -> Result<BleuStats> {
    if hyps.len() != refs.len() {
        return Err(Error::Usage(format!(
            "{} hypotheses for {} references",
            hyps.len(),
            refs.len()
        )));
    }
    let mut total = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        total.add(&BleuStats::from_pair(h.as_ref(), r.as_ref()));
    }
    Ok(total)
}

/// Corpus BLEU from pooled n-gram statistics.
pub fn corpus_bleu<T: Eq + Hash, H: AsRef<[T]>, R: AsRef<[T]>>(hyps: &[H], refs: &[R]) -> Result<f64> {
    if hyps.is_empty() {
        return Err(Error::Usage("corpus BLEU needs at least one sentence".into()));
    }
    Ok(corpus_stats(hyps, refs)?.score())
}

/// Smoothed single-sentence BLEU.
pub fn sentence_bleu<T: Eq + Hash>(hyp: &[T], reference: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Usage("sentence BLEU needs a non-empty reference".into()));
    }
    Ok(BleuStats::from_pair(hyp, reference).smoothed_score())
}
