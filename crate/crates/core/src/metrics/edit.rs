use crate::{Error, Result};

/// Edit operation counts against a reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EditSummary {
    pub substitutions: u64,
    pub insertions: u64,
    pub deletions: u64,
    pub shifts: u64,
    pub ref_len: u64,
}

impl EditSummary {
    pub fn errors(&self) -> u64 {
        self.substitutions + self.insertions + self.deletions + self.shifts
    }

    /// Error rate; WER when `shifts == 0`, TER otherwise.
    pub fn rate(&self) -> f64 {
        if self.ref_len == 0 {
            return 0.0;
        }
        self.errors() as f64 / self.ref_len as f64
    }

    pub fn add(&mut self, other: &Self) {
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.shifts += other.shifts;
        self.ref_len += other.ref_len;
    }
}

/// Unit-cost Levenshtein distance between token sequences.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Full DP table plus one deterministic backtrace. Returns the edit summary
/// and, for each hypothesis position, the reference position it is matched
/// to (exact matches only).
fn align<T: PartialEq>(hyp: &[T], reference: &[T]) -> (EditSummary, Vec<Option<usize>>) {
    let (n, m) = (hyp.len(), reference.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for j in 0..=m {
        d[j] = j;
    }
    for i in 1..=n {
        d[i * w] = i;
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + usize::from(hyp[i - 1] != reference[j - 1]);
            d[i * w + j] = sub.min(d[(i - 1) * w + j] + 1).min(d[i * w + j - 1] + 1);
        }
    }
    let mut s = EditSummary {
        ref_len: m as u64,
        ..Default::default()
    };
    let mut matched = vec![None; n];
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = hyp[i - 1] == reference[j - 1];
            if d[i * w + j] == d[(i - 1) * w + j - 1] + usize::from(!same) {
                if same {
                    matched[i - 1] = Some(j - 1);
                } else {
                    s.substitutions += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i * w + j] == d[(i - 1) * w + j] + 1 {
            s.insertions += 1;
            i -= 1;
        } else {
            s.deletions += 1;
            j -= 1;
        }
    }
    (s, matched)
}

pub fn wer_summary<T: PartialEq>(hyp: &[T], reference: &[T]) -> Result<EditSummary> {
    if reference.is_empty() {
        return Err(Error::Usage("WER needs a non-empty reference".into()));
    }
    Ok(align(hyp, reference).0)
}

/// Word error rate: Levenshtein distance over reference length.
pub fn wer<T: PartialEq>(hyp: &[T], reference: &[T]) -> Result<f64> {
    Ok(wer_summary(hyp, reference)?.rate())
}

/// Longest block considered for a shift.
const MAX_SHIFT_LEN: usize = 10;

fn shifted<T: Clone>(h: &[T], start: usize, len: usize, dest: usize) -> Vec<T> {
    let mut rest: Vec<T> = Vec::with_capacity(h.len());
    rest.extend_from_slice(&h[..start]);
    rest.extend_from_slice(&h[start + len..]);
    let mut out = Vec::with_capacity(h.len());
    out.extend_from_slice(&rest[..dest]);
    out.extend_from_slice(&h[start..start + len]);
    out.extend_from_slice(&rest[dest..]);
    out
}

/// TER statistics with greedy block shifts. A candidate block must equal
/// some reference span it is not already aligned to; each round applies the
/// shift with the largest reduction of (shifts + edit distance) and stops
/// when no shift helps.
pub fn ter_summary<T: PartialEq + Clone>(hyp: &[T], reference: &[T]) -> Result<EditSummary> {
    if reference.is_empty() {
        return Err(Error::Usage("TER needs a non-empty reference".into()));
    }
    let mut h = hyp.to_vec();
    let mut shifts = 0u64;
    let (mut summary, mut matched) = align(&h, reference);
    let mut cost = summary.errors() as usize;
    loop {
        let mut best: Option<(usize, Vec<T>)> = None;
        let n = h.len();
        for start in 0..n {
            for len in (1..=MAX_SHIFT_LEN.min(n - start)).rev() {
                let block = &h[start..start + len];
                let spans: Vec<usize> = (0..=reference.len().saturating_sub(len))
                    .filter(|&j| reference.len() >= len && &reference[j..j + len] == block)
                    .filter(|&j| (0..len).any(|k| matched[start + k] != Some(j + k)))
                    .collect();
                if spans.is_empty() {
                    continue;
                }
                for dest in 0..=n - len {
                    if dest == start {
                        continue;
                    }
                    let cand = shifted(&h, start, len, dest);
                    let c = levenshtein(&cand, reference);
                    if c + 1 < best.as_ref().map_or(cost, |b| b.0) {
                        best = Some((c + 1, cand));
                    }
                }
            }
        }
        match best {
            Some((new_cost, cand)) => {
                assert!(new_cost < cost, "shift must lower the total cost");
                h = cand;
                shifts += 1;
                let a = align(&h, reference);
                summary = a.0;
                matched = a.1;
                cost = summary.errors() as usize;
            }
            None => break,
        }
    }
    summary.shifts = shifts;
    if hyp.len().max(reference.len()) <= EXACT_MAX_LEN {
        if let Some(exact) = exact_shift_search(hyp, reference, summary.errors() as usize) {
            return Ok(exact);
        }
    }
    Ok(summary)
}

/// Below this length the greedy result is refined by a complete search over
/// block moves, which is cheap and removes the greedy search's rare misses.
const EXACT_MAX_LEN: usize = 6;

/// Breadth-first search over hypotheses reachable by block moves, returning a
/// summary strictly cheaper than `bound` if one exists.
fn exact_shift_search<T: PartialEq + Clone>(hyp: &[T], reference: &[T], bound: usize) -> Option<EditSummary> {
    let mut seen: Vec<Vec<T>> = vec![hyp.to_vec()];
    let mut frontier = vec![hyp.to_vec()];
    let mut best: Option<(usize, usize, Vec<T>)> = None;
    let mut best_cost = bound;
    for depth in 1.. {
        if depth >= best_cost || frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for cur in &frontier {
            let n = cur.len();
            for start in 0..n {
                for len in 1..=n - start {
                    for dest in 0..=n - len {
                        if dest == start {
                            continue;
                        }
                        let cand = shifted(cur, start, len, dest);
                        if seen.contains(&cand) {
                            continue;
                        }
                        let c = depth + levenshtein(&cand, reference);
                        if c < best_cost {
                            best_cost = c;
                            best = Some((depth, c, cand.clone()));
                        }
                        seen.push(cand.clone());
                        next.push(cand);
                    }
                }
            }
        }
        frontier = next;
    }
    best.map(|(depth, _, h)| {
        let mut s = align(&h, reference).0;
        s.shifts = depth as u64;
        s
    })
}

/// Translation edit rate: (edits + shifts) / reference length.
pub fn ter<T: PartialEq + Clone>(hyp: &[T], reference: &[T]) -> Result<f64> {
    Ok(ter_summary(hyp, reference)?.rate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn wer_examples() {
        assert_eq!(wer(&t("a b c"), &t("a b c")).unwrap(), 0.0);
        assert_eq!(wer(&t("a x c"), &t("a b c d")).unwrap(), 0.5);
        assert_eq!(wer(&t(""), &t("a b c d e")).unwrap(), 1.0);
        assert!(wer(&t("a"), &t("")).is_err());
        let s = wer_summary(&t("a x c"), &t("a b c d")).unwrap();
        assert_eq!((s.substitutions, s.deletions, s.insertions), (1, 1, 0));
    }

    #[test]
    fn ter_examples() {
        assert_eq!(ter(&t("a b"), &t("a b")).unwrap(), 0.0);
        let s = ter_summary(&t("b a"), &t("a b")).unwrap();
        assert_eq!((s.shifts, s.errors()), (1, 1));
        assert_eq!(s.rate(), 0.5);
        let s = ter_summary(&t("a x"), &t("a b")).unwrap();
        assert_eq!((s.shifts, s.substitutions), (0, 1));
        assert_eq!(s.rate(), 0.5);
        assert_eq!(ter(&t(""), &t("a b c")).unwrap(), 1.0);
        assert!(ter(&t("a"), &t("")).is_err());
    }

    #[test]
    fn block_shift_counts_once() {
        // moving "c d" to the front is one shift
        let s = ter_summary(&t("a b c d"), &t("c d a b")).unwrap();
        assert_eq!(s.errors(), 1);
    }
}
