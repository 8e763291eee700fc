//! Corpus BLEU, TER, WER, reward-to-go and a paired randomization test on
//! whitespace-tokenized sentences.

use imitkd::metrics::{
    bleu_reward_to_go, corpus_bleu, paired_randomization_test, ter, wer, BleuStats, DEFAULT_TRIALS,
};

fn toks(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn main() -> imitkd::Result<()> {
    let refs: Vec<Vec<&str>> = ["the cat sat on a mat", "a dog ran in the park", "birds sing at dawn"]
        .iter()
        .map(|s| toks(s))
        .collect();
    let a: Vec<Vec<&str>> = ["the cat sat on the mat", "a dog ran in a park", "birds sing at dawn"]
        .iter()
        .map(|s| toks(s))
        .collect();
    let b: Vec<Vec<&str>> = ["cat the sat mat", "dog ran park", "birds at dawn sing"]
        .iter()
        .map(|s| toks(s))
        .collect();
    println!("BLEU a {:.2}  b {:.2}", corpus_bleu(&a, &refs)?, corpus_bleu(&b, &refs)?);
    println!("TER  {:.3}  WER {:.3}", ter(&b[0], &refs[0])?, wer(&b[0], &refs[0])?);
    let full = toks("the cat sat on the mat");
    println!("reward-to-go of 'the cat' {:.2}", bleu_reward_to_go(&full[..2], &full, &refs[0])?);
    let sa: Vec<BleuStats> = a.iter().zip(&refs).map(|(h, r)| BleuStats::from_pair(h, r)).collect();
    let sb: Vec<BleuStats> = b.iter().zip(&refs).map(|(h, r)| BleuStats::from_pair(h, r)).collect();
    let p = paired_randomization_test(&sa, &sb, DEFAULT_TRIALS, 7)?;
    println!("p(a vs b) {p:.4}");
    Ok(())
}
