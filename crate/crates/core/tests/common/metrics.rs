//! Independent metric oracles.

use std::collections::{HashSet, VecDeque};

use imitkd::metrics::{corpus_bleu, levenshtein, ter_summary, wer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn toks(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

pub fn random_seq(r: &mut ChaCha8Rng, max_len: usize, vocab: u32) -> Vec<u32> {
    let n = r.gen_range(0..=max_len);
    (0..n).map(|_| r.gen_range(0..vocab)).collect()
}

/// Counts n-grams by linear scans over the hypothesis and reference.
pub fn brute_bleu(hyps: &[Vec<u32>], refs: &[Vec<u32>]) -> f64 {
    let mut matches = [0u64; 4];
    let mut totals = [0u64; 4];
    let (mut c, mut r) = (0u64, 0u64);
    for (h, rf) in hyps.iter().zip(refs) {
        c += h.len() as u64;
        r += rf.len() as u64;
        for n in 1..=4 {
            if h.len() < n {
                continue;
            }
            let hg: Vec<&[u32]> = h.windows(n).collect();
            let rg: Vec<&[u32]> = if rf.len() >= n { rf.windows(n).collect() } else { Vec::new() };
            totals[n - 1] += hg.len() as u64;
            let mut seen: Vec<&[u32]> = Vec::new();
            for g in &hg {
                if seen.contains(g) {
                    continue;
                }
                seen.push(g);
                let in_h = hg.iter().filter(|x| *x == g).count() as u64;
                let in_r = rg.iter().filter(|x| *x == g).count() as u64;
                matches[n - 1] += in_h.min(in_r);
            }
        }
    }
    if c == 0 || matches.iter().any(|&m| m == 0) {
        return 0.0;
    }
    let mut log_p = 0.0;
    for n in 0..4 {
        log_p += (matches[n] as f64 / totals[n] as f64).ln();
    }
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    100.0 * bp * (log_p / 4.0).exp()
}

/// Quadratic Levenshtein table, written independently of the library.
pub fn dp_distance(a: &[u32], b: &[u32]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn all_block_moves(h: &[u32]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for start in 0..h.len() {
        for len in 1..=h.len() - start {
            let block = &h[start..start + len];
            let rest: Vec<u32> = h[..start].iter().chain(&h[start + len..]).copied().collect();
            for dest in 0..=rest.len() {
                if dest == start {
                    continue;
                }
                let mut v = rest[..dest].to_vec();
                v.extend_from_slice(block);
                v.extend_from_slice(&rest[dest..]);
                out.push(v);
            }
        }
    }
    out
}

/// Minimum over every sequence of block moves of (moves + edit distance).
pub fn exhaustive_ter_errors(h: &[u32], r: &[u32]) -> usize {
    let mut best = dp_distance(h, r);
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(h.to_vec());
    queue.push_back((h.to_vec(), 0usize));
    while let Some((cur, k)) = queue.pop_front() {
        best = best.min(k + dp_distance(&cur, r));
        if k + 1 >= best {
            continue;
        }
        for next in all_block_moves(&cur) {
            if seen.insert(next.clone()) {
                queue.push_back((next, k + 1));
            }
        }
    }
    best
}

/// corpus_bleu against the brute-force scorer on 200 random corpora.
pub fn check_bleu_oracle() -> Result<(), String> {
    let mut r = ChaCha8Rng::seed_from_u64(20);
    for i in 0..200 {
        let n = r.gen_range(1..=20);
        let vocab = r.gen_range(2..8);
        let refs: Vec<Vec<u32>> = (0..n).map(|_| random_seq(&mut r, 15, vocab)).collect();
        let hyps: Vec<Vec<u32>> = refs
            .iter()
            .map(|x| {
                if r.gen_bool(0.3) {
                    random_seq(&mut r, 15, vocab)
                } else {
                    x.iter().map(|&t| if r.gen_bool(0.2) { r.gen_range(0..vocab) } else { t }).collect()
                }
            })
            .collect();
        let got = corpus_bleu(&hyps, &refs).map_err(|e| e.to_string())?;
        let want = brute_bleu(&hyps, &refs);
        if (got - want).abs() > 1e-9 {
            return Err(format!("corpus {i}: {got} vs {want}"));
        }
    }
    Ok(())
}

pub fn check_hand_example() -> Result<f64, String> {
    let b = corpus_bleu(&[toks("the cat sat on the mat")], &[toks("the cat sat on a mat")]).map_err(|e| e.to_string())?;
    if (b - 53.73).abs() < 1e-2 {
        Ok(b)
    } else {
        Err(format!("hand example gave {b}"))
    }
}

/// Greedy-shift TER against exhaustive search on 500 pairs of length <= 6.
pub fn check_ter_oracle() -> Result<(), String> {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let vocab = r.gen_range(2..5);
        let mut rf = random_seq(&mut r, 6, vocab);
        if rf.is_empty() {
            rf.push(0);
        }
        let h = if r.gen_bool(0.5) {
            let mut h = rf.clone();
            let moves = all_block_moves(&h);
            if !moves.is_empty() {
                h = moves[r.gen_range(0..moves.len())].clone();
            }
            h
        } else {
            random_seq(&mut r, 6, vocab)
        };
        let got = ter_summary(&h, &rf).map_err(|e| e.to_string())?.errors() as usize;
        let want = exhaustive_ter_errors(&h, &rf);
        if got != want {
            return Err(format!("hyp {h:?} ref {rf:?}: {got} vs {want} errors"));
        }
    }
    Ok(())
}

/// WER against the DP oracle on 1000 pairs.
pub fn check_wer_oracle() -> Result<(), String> {
    let mut r = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let vocab = r.gen_range(2..6);
        let mut rf = random_seq(&mut r, 12, vocab);
        if rf.is_empty() {
            rf.push(1);
        }
        let h = random_seq(&mut r, 12, vocab);
        let d = dp_distance(&h, &rf);
        let w = wer(&h, &rf).map_err(|e| e.to_string())?;
        if levenshtein(&h, &rf) != d || w != d as f64 / rf.len() as f64 {
            return Err(format!("hyp {h:?} ref {rf:?}: distance {d}, wer {w}"));
        }
    }
    Ok(())
}
