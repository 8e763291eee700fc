//! Greedy and beam search over any [`Policy`], expert one-step corrections,
//! prefix-forced continuations and top-k inspection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenId, EOS, T_MAX};
use crate::policy::{check_ids, linalg::log_softmax, next_token_distribution, Policy, PolicyOutput};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub beam_size: usize,
    /// Maximum hypothesis length, end-of-sequence included.
    pub t_max: usize,
    /// Finished hypotheses are ranked by `log_prob / len^length_norm`.
    pub length_norm: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_size: 5,
            t_max: T_MAX,
            length_norm: 0.0,
        }
    }
}

impl DecodeConfig {
    pub fn greedy() -> Self {
        Self {
            beam_size: 1,
            ..Self::default()
        }
    }

    pub fn beam(beam_size: usize) -> Self {
        Self {
            beam_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam size must be at least 1".into()));
        }
        if !(2..=T_MAX).contains(&self.t_max) {
            return Err(Error::Config(format!("t_max {} outside [2, {T_MAX}]", self.t_max)));
        }
        if !(0.0..=1.0).contains(&self.length_norm) {
            return Err(Error::Config(format!(
                "length normalization exponent {} outside [0, 1]",
                self.length_norm
            )));
        }
        Ok(())
    }
}

/// A (possibly partial) output sequence with its cumulative log-probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<TokenId>,
    pub log_prob: f64,
    pub finished: bool,
}

impl Hypothesis {
    /// Tokens without the end-of-sequence marker.
    pub fn body(&self) -> &[TokenId] {
        match self.tokens.last() {
            Some(&EOS) => &self.tokens[..self.tokens.len() - 1],
            _ => &self.tokens,
        }
    }

    /// Ranking score under length-normalization exponent `alpha`.
    pub fn score(&self, alpha: f64) -> f64 {
        if alpha == 0.0 || self.tokens.is_empty() {
            self.log_prob
        } else {
            self.log_prob / (self.tokens.len() as f64).powf(alpha)
        }
    }
}

/// Greedy decoding: argmax at every step, lowest index on ties.
pub fn greedy_decode<P: Policy>(policy: &P, source: &[TokenId], cfg: &DecodeConfig) -> Result<Hypothesis> {
    let state = policy.start(source)?;
    Ok(greedy_from(policy, state, Vec::new(), 0.0, cfg.t_max))
}

fn greedy_from<P: Policy>(policy: &P, mut state: P::State, mut tokens: Vec<TokenId>, mut log_prob: f64, t_max: usize) -> Hypothesis {
    while tokens.len() < t_max {
        let lp = log_softmax(policy.logits(&state));
        let tok = crate::policy::argmax(&lp);
        log_prob += lp[tok as usize];
        tokens.push(tok);
        if tok == EOS {
            return Hypothesis {
                tokens,
                log_prob,
                finished: true,
            };
        }
        if tokens.len() < t_max {
            state = policy.advance(&state, tok);
        }
    }
    Hypothesis {
        tokens,
        log_prob,
        finished: false,
    }
}

struct Entry<S> {
    tokens: Vec<TokenId>,
    log_prob: f64,
    state: Option<S>,
}

struct Candidate {
    score: f64,
    parent: usize,
    /// Log-probability of the appended token; `None` carries a finished entry.
    step: Option<(f64, TokenId)>,
}

/// Candidate order: score, then earlier parent, then the step's own
/// log-probability, then the lower token index.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.parent.cmp(&b.parent))
        .then_with(|| match (a.step, b.step) {
            (Some((la, ta)), Some((lb, tb))) => lb.total_cmp(&la).then(ta.cmp(&tb)),
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        })
}

/// Beam search over cumulative log-probability. Finished hypotheses keep
/// their slot until every slot is finished or `t_max` is reached; the best
/// finished hypothesis under length normalization is returned (the best
/// unfinished one if nothing finished).
pub fn beam_decode<P: Policy>(policy: &P, source: &[TokenId], cfg: &DecodeConfig) -> Result<Hypothesis> {
    cfg.validate()?;
    let state = policy.start(source)?;
    Ok(beam_from(policy, state, Vec::new(), 0.0, cfg))
}

fn beam_from<P: Policy>(policy: &P, state: P::State, tokens: Vec<TokenId>, log_prob: f64, cfg: &DecodeConfig) -> Hypothesis {
    let mut beam = vec![Entry {
        tokens,
        log_prob,
        state: Some(state),
    }];
    let mut cands: Vec<Candidate> = Vec::new();
    loop {
        let live = beam.iter().any(|e| e.state.is_some() && e.tokens.len() < cfg.t_max);
        if !live {
            break;
        }
        cands.clear();
        for (i, e) in beam.iter().enumerate() {
            match &e.state {
                Some(s) if e.tokens.len() < cfg.t_max => {
                    let lp = log_softmax(policy.logits(s));
                    for (v, &l) in lp.iter().enumerate() {
                        cands.push(Candidate {
                            score: e.log_prob + l,
                            parent: i,
                            step: Some((l, v as TokenId)),
                        });
                    }
                }
                _ => {
                    cands.push(Candidate {
                        score: e.log_prob,
                        parent: i,
                        step: None,
                    });
                }
            }
        }
        let keep = cfg.beam_size.min(cands.len());
        if keep < cands.len() {
            cands.select_nth_unstable_by(keep - 1, rank);
            cands.truncate(keep);
        }
        cands.sort_by(rank);
        let mut next = Vec::with_capacity(keep);
        for c in &cands {
            let parent = &beam[c.parent];
            match c.step {
                None => next.push(Entry {
                    tokens: parent.tokens.clone(),
                    log_prob: parent.log_prob,
                    state: None,
                }),
                Some((_, tok)) => {
                    let mut tokens = parent.tokens.clone();
                    tokens.push(tok);
                    let state = if tok == EOS || tokens.len() >= cfg.t_max {
                        None
                    } else {
                        parent.state.as_ref().map(|s| policy.advance(s, tok))
                    };
                    next.push(Entry {
                        tokens,
                        log_prob: c.score,
                        state,
                    });
                }
            }
        }
        beam = next;
    }
    let hyps: Vec<Hypothesis> = beam
        .into_iter()
        .map(|e| Hypothesis {
            finished: e.tokens.last() == Some(&EOS),
            tokens: e.tokens,
            log_prob: e.log_prob,
        })
        .collect();
    let pick = |finished: bool| {
        hyps.iter()
            .filter(|h| h.finished == finished)
            .fold(None::<&Hypothesis>, |best, h| match best {
                Some(b) if b.score(cfg.length_norm) >= h.score(cfg.length_norm) => Some(b),
                _ => Some(h),
            })
            .cloned()
    };
    pick(true).or_else(|| pick(false)).expect("beam is never empty")
}

/// Decodes every source in order.
pub fn decode_all<P: Policy, S: AsRef<[TokenId]>>(policy: &P, sources: &[S], cfg: &DecodeConfig) -> Result<Vec<Hypothesis>> {
    sources.iter().map(|s| beam_decode(policy, s.as_ref(), cfg)).collect()
}

/// Expert one-step correction: argmax next token after `prefix` together
/// with the full distribution.
pub fn oracle_next_token<P: Policy>(expert: &P, source: &[TokenId], prefix: &[TokenId]) -> Result<(TokenId, PolicyOutput)> {
    let out = next_token_distribution(expert, source, prefix)?;
    Ok((out.argmax(), out))
}

/// Expert outputs after every prefix of `seq` from a single incremental pass:
/// entry `t` is the correction for `seq[..t]`, for `t` in `0..=seq.len()`
/// (stopping early once `T_MAX` would be exceeded).
pub fn oracle_corrections<P: Policy>(expert: &P, source: &[TokenId], seq: &[TokenId]) -> Result<Vec<(TokenId, PolicyOutput)>> {
    check_ids(seq, expert.target_vocab_size(), "prefix")?;
    let mut state = expert.start(source)?;
    let n = seq.len().min(T_MAX - 1);
    let mut out = Vec::with_capacity(n + 1);
    for t in 0..=n {
        let o = PolicyOutput::from_logits(expert.logits(&state).to_vec());
        out.push((o.argmax(), o));
        if t < n {
            state = expert.advance(&state, seq[t]);
        }
    }
    Ok(out)
}

/// Best continuation of a forced `prefix` under `policy` (greedy when the
/// beam size is 1), returned with the prefix included. A prefix that already
/// ends in end-of-sequence, or fills `t_max`, is returned as is.
pub fn continue_decode<P: Policy>(policy: &P, source: &[TokenId], prefix: &[TokenId], cfg: &DecodeConfig) -> Result<Hypothesis> {
    cfg.validate()?;
    check_ids(prefix, policy.target_vocab_size(), "prefix")?;
    let mut state = policy.start(source)?;
    let mut log_prob = 0.0;
    let mut tokens = Vec::with_capacity(prefix.len() + 1);
    for &tok in prefix {
        if tokens.last() == Some(&EOS) {
            break;
        }
        if tokens.len() >= cfg.t_max {
            return Err(Error::Usage(format!(
                "forced prefix of length {} exceeds t_max {}",
                prefix.len(),
                cfg.t_max
            )));
        }
        log_prob += log_softmax(policy.logits(&state))[tok as usize];
        tokens.push(tok);
        if tok != EOS && tokens.len() < cfg.t_max {
            state = policy.advance(&state, tok);
        }
    }
    if tokens.last() == Some(&EOS) || tokens.len() >= cfg.t_max {
        let finished = tokens.last() == Some(&EOS);
        return Ok(Hypothesis {
            tokens,
            log_prob,
            finished,
        });
    }
    Ok(beam_from(policy, state, tokens, log_prob, cfg))
}

/// Best continuation of `prefix + forced_action` under `expert`, returned
/// with the forced part included. A prefix that already ends in
/// end-of-sequence is returned unchanged.
pub fn oracle_continuation<P: Policy>(
    expert: &P,
    source: &[TokenId],
    prefix: &[TokenId],
    forced_action: TokenId,
    cfg: &DecodeConfig,
) -> Result<Hypothesis> {
    if prefix.last() == Some(&EOS) {
        return continue_decode(expert, source, prefix, cfg);
    }
    let mut forced = Vec::with_capacity(prefix.len() + 1);
    forced.extend_from_slice(prefix);
    forced.push(forced_action);
    continue_decode(expert, source, &forced, cfg)
}

/// The `k` most probable next tokens, descending, lowest index on ties.
pub fn topk_inspect<P: Policy>(policy: &P, source: &[TokenId], prefix: &[TokenId], k: usize) -> Result<Vec<(TokenId, f64)>> {
    let vocab = policy.target_vocab_size();
    if k == 0 || k > vocab {
        return Err(Error::Usage(format!("k = {k} outside [1, {vocab}]")));
    }
    let probs = next_token_distribution(policy, source, prefix)?.probs();
    let mut idx: Vec<usize> = (0..vocab).collect();
    idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    Ok(idx[..k].iter().map(|&i| (i as TokenId, probs[i])).collect())
}

/// Renders top-k queries along a prefix as TSV rows `step rank token probability`.
pub fn render_topk<P: Policy>(
    policy: &P,
    source: &[TokenId],
    sequence: &[TokenId],
    k: usize,
    symbol: impl Fn(TokenId) -> String,
) -> Result<String> {
    let mut out = String::from("step\trank\ttoken\tprobability\n");
    let steps = sequence.len().min(T_MAX - 1);
    for step in 0..=steps {
        for (rank, (tok, p)) in topk_inspect(policy, source, &sequence[..step], k)?.into_iter().enumerate() {
            out.push_str(&format!("{step}\t{}\t{}\t{p:.6}\n", rank + 1, symbol(tok)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::TabularPolicy;

    const SRC: &[TokenId] = &[4, 2];

    fn chain() -> TabularPolicy {
        // Puts probability 0.9 on 3, 0, 2 along the chain.
        let mut p = TabularPolicy::uniform(4, 8);
        p.set(&[], vec![0.05, 0.0, 0.05, 0.9]).unwrap();
        p.set(&[3], vec![0.9, 0.05, 0.05, 0.0]).unwrap();
        p.set(&[3, 0], vec![0.0, 0.05, 0.9, 0.05]).unwrap();
        p
    }

    #[test]
    fn greedy_follows_argmax_chain() {
        let h = greedy_decode(&chain(), SRC, &DecodeConfig::greedy()).unwrap();
        assert_eq!(h.tokens, vec![3, 0, EOS]);
        assert!(h.finished);
        assert!((h.log_prob - 3.0 * 0.9f64.ln()).abs() < 1e-12);
        assert_eq!(h.body(), &[3, 0]);
    }

    #[test]
    fn immediate_eos_gives_empty_body() {
        let p = TabularPolicy::uniform(4, 8).with_default(vec![0.1, 0.1, 0.7, 0.1]).unwrap();
        let h = greedy_decode(&p, SRC, &DecodeConfig::greedy()).unwrap();
        assert!(h.body().is_empty());
        assert!(h.finished);
    }

    #[test]
    fn t_max_stops_unfinished() {
        let p = TabularPolicy::uniform(4, 8).with_default(vec![0.1, 0.1, 0.1, 0.7]).unwrap();
        let cfg = DecodeConfig { t_max: 5, ..DecodeConfig::greedy() };
        let h = greedy_decode(&p, SRC, &cfg).unwrap();
        assert_eq!(h.tokens, vec![3; 5]);
        assert!(!h.finished);
        let b = beam_decode(&p, SRC, &DecodeConfig { beam_size: 3, ..cfg }).unwrap();
        assert!(b.tokens.len() <= 5);
    }

    #[test]
    fn garden_path_needs_a_wider_beam() {
        // Greedy takes 3 (0.6) and then faces a flat row; 0 (0.4) leads to a
        // near-certain EOS.
        let mut p = TabularPolicy::uniform(4, 8);
        p.set(&[], vec![0.4, 0.0, 0.0, 0.6]).unwrap();
        p.set(&[3], vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        p.set(&[0], vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let g = beam_decode(&p, SRC, &DecodeConfig::beam(1)).unwrap();
        let b = beam_decode(&p, SRC, &DecodeConfig::beam(2)).unwrap();
        assert_eq!(b.tokens, vec![0, EOS]);
        assert!(b.log_prob > g.log_prob);
    }

    #[test]
    fn continuation_respects_forced_prefix() {
        let p = chain();
        let h = oracle_continuation(&p, SRC, &[], 3, &DecodeConfig::beam(1)).unwrap();
        assert_eq!(h.tokens, vec![3, 0, EOS]);
        let done = oracle_continuation(&p, SRC, &[3, EOS], 0, &DecodeConfig::beam(2)).unwrap();
        assert_eq!(done.tokens, vec![3, EOS]);
        let forced = oracle_continuation(&p, SRC, &[3], 1, &DecodeConfig::beam(3)).unwrap();
        assert_eq!(&forced.tokens[..2], &[3, 1]);
        assert!(forced.finished);
    }

    #[test]
    fn topk_and_oracle_agree() {
        let p = TabularPolicy::uniform(3, 8).with_default(vec![0.5, 0.3, 0.2]).unwrap();
        let top = topk_inspect(&p, SRC, &[], 2).unwrap();
        assert_eq!(top.iter().map(|t| t.0).collect::<Vec<_>>(), vec![0, 1]);
        let q = TabularPolicy::uniform(3, 8).with_default(vec![0.1, 0.7, 0.2]).unwrap();
        assert_eq!(oracle_next_token(&q, SRC, &[]).unwrap().0, 1);
        assert_eq!(topk_inspect(&q, SRC, &[], 1).unwrap()[0].0, 1);
        let u = TabularPolicy::uniform(4, 8);
        assert_eq!(oracle_next_token(&u, SRC, &[]).unwrap().0, 0);
        let all = topk_inspect(&u, SRC, &[], 4).unwrap();
        assert!(all.iter().all(|&(_, p)| (p - 0.25).abs() < 1e-12));
        assert!(topk_inspect(&u, SRC, &[], 0).is_err());
        assert!(topk_inspect(&u, SRC, &[], 5).is_err());
    }

    #[test]
    fn incremental_corrections_match_single_queries() {
        let p = chain();
        let seq = [3, 0, 2];
        let all = oracle_corrections(&p, SRC, &seq).unwrap();
        for (t, (tok, out)) in all.iter().enumerate() {
            let (t1, o1) = oracle_next_token(&p, SRC, &seq[..t]).unwrap();
            assert_eq!((*tok, out), (t1, &o1));
        }
    }

    #[test]
    fn config_validation() {
        assert!(DecodeConfig::beam(0).validate().is_err());
        assert!(DecodeConfig { t_max: 1, ..Default::default() }.validate().is_err());
        assert!(DecodeConfig { length_norm: 1.5, ..Default::default() }.validate().is_err());
    }
}
