//! Exhaustive search over small random tabular policies.

use imitkd::corpus::{TokenId, EOS};
use imitkd::decode::{beam_decode, greedy_decode, DecodeConfig, Hypothesis};
use imitkd::policy::TabularPolicy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SRC: &[TokenId] = &[5, 2];

/// Random table covering every prefix up to `horizon` tokens.
pub fn random_policy(vocab: usize, horizon: usize, seed: u64) -> TabularPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = TabularPolicy::uniform(vocab, 8);
    let mut prefixes: Vec<Vec<TokenId>> = vec![vec![]];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for pre in &prefixes {
            let w: Vec<f64> = (0..vocab).map(|_| rng.gen_range(0.05..1.0f64).powi(3)).collect();
            let s: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|x| x / s).collect();
            let fix: f64 = row[1..].iter().sum();
            row[0] = 1.0 - fix;
            p.set(pre, row).unwrap();
            for v in 0..vocab as TokenId {
                if v != EOS {
                    let mut q = pre.clone();
                    q.push(v);
                    next.push(q);
                }
            }
        }
        prefixes = next;
    }
    p
}

/// Every sequence up to `horizon` tokens: finished ones end at their first
/// EOS, unfinished ones have exactly `horizon` tokens.
pub fn enumerate(p: &TabularPolicy, prefix: &[TokenId], horizon: usize) -> Vec<Hypothesis> {
    let mut out = Vec::new();
    let mut stack = vec![(prefix.to_vec(), score_of(p, prefix))];
    while let Some((seq, lp)) = stack.pop() {
        if seq.last() == Some(&EOS) || seq.len() == horizon {
            out.push(Hypothesis { finished: seq.last() == Some(&EOS), tokens: seq, log_prob: lp });
            continue;
        }
        let row = imitkd::policy::next_token_distribution(p, SRC, &seq).unwrap();
        for v in 0..p_vocab(p) {
            let mut s = seq.clone();
            s.push(v as TokenId);
            stack.push((s, lp + row.log_probs[v]));
        }
    }
    out
}

pub fn p_vocab(p: &TabularPolicy) -> usize {
    use imitkd::policy::Policy;
    p.target_vocab_size()
}

pub fn score_of(p: &TabularPolicy, seq: &[TokenId]) -> f64 {
    let outs = imitkd::policy::prefix_outputs(p, SRC, seq).unwrap();
    seq.iter().enumerate().map(|(t, &v)| outs[t].log_probs[v as usize]).sum()
}

pub fn best(hyps: &[Hypothesis]) -> &Hypothesis {
    let finished: Vec<&Hypothesis> = hyps.iter().filter(|h| h.finished).collect();
    let pool: Vec<&Hypothesis> = if finished.is_empty() { hyps.iter().collect() } else { finished };
    pool.into_iter().max_by(|a, b| a.log_prob.total_cmp(&b.log_prob)).unwrap()
}

pub fn cfg(beam: usize, horizon: usize) -> DecodeConfig {
    DecodeConfig { beam_size: beam, t_max: horizon, length_norm: 0.0 }
}

/// Beam wide enough that nothing is ever pruned.
pub fn full_width(vocab: usize, horizon: usize) -> usize {
    vocab.pow(horizon as u32)
}

pub fn key(h: &Hypothesis) -> (bool, f64) {
    (h.finished, h.log_prob)
}

/// Beam size 1 against greedy decoding on 200 random tabular policies.
pub fn check_beam_one_is_greedy() -> Result<(), String> {
    for seed in 0..200 {
        let (v, h) = (3 + (seed % 2) as usize, 2 + (seed % 3) as usize);
        let p = random_policy(v, h, seed);
        let g = greedy_decode(&p, SRC, &cfg(1, h)).map_err(|e| e.to_string())?;
        let b = beam_decode(&p, SRC, &cfg(1, h)).map_err(|e| e.to_string())?;
        if g != b {
            return Err(format!("seed {seed}: greedy {:?} beam {:?}", g.tokens, b.tokens));
        }
    }
    Ok(())
}

/// Unpruned beam search against enumeration for every valid |V| <= 4 and
/// horizon <= 4 (the end token needs |V| >= 3, decoding needs horizon >= 2).
pub fn check_beam_is_exhaustive() -> Result<(), String> {
    for vocab in 3..=4 {
        for horizon in 2..=4 {
            for seed in 0..40 {
                let p = random_policy(vocab, horizon, seed);
                let all = enumerate(&p, &[], horizon);
                let exact = best(&all);
                let b = beam_decode(&p, SRC, &cfg(full_width(vocab, horizon), horizon)).map_err(|e| e.to_string())?;
                if b.tokens != exact.tokens || (b.log_prob - exact.log_prob).abs() >= 1e-12 {
                    return Err(format!("V={vocab} h={horizon} seed={seed}"));
                }
            }
        }
    }
    Ok(())
}
