//! Metrics against independent brute-force oracles.

mod common;

use imitkd::metrics::{
    bleu_reward_to_go, corpus_bleu, levenshtein, paired_randomization_test, sentence_bleu, ter, ter_reward_to_go,
    ter_summary, wer, wer_histogram, BleuStats,
};
use common::metrics::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn corpus_bleu_matches_brute_force_on_200_corpora() {
    check_bleu_oracle().unwrap();
}

#[test]
fn hand_computed_bleu_example() {
    let b = check_hand_example().unwrap();
    let want = 100.0 * ((5.0 / 6.0) * (3.0 / 5.0) * (2.0 / 4.0) * (1.0 / 3.0f64)).powf(0.25);
    assert!((b - want).abs() < 1e-12);
}

#[test]
fn ter_matches_exhaustive_search_on_500_pairs() {
    check_ter_oracle().unwrap();
}

#[test]
fn wer_matches_dp_oracle_on_1000_pairs() {
    check_wer_oracle().unwrap();
}

#[test]
fn ter_spec_examples() {
    assert_eq!(ter(&toks("b a"), &toks("a b")).unwrap(), 0.5);
    assert_eq!(ter_summary(&toks("b a"), &toks("a b")).unwrap().shifts, 1);
    assert_eq!(ter(&toks("a x"), &toks("a b")).unwrap(), 0.5);
    assert_eq!(ter_summary(&toks("a x"), &toks("a b")).unwrap().shifts, 0);
    assert_eq!(ter(&toks("a b c"), &toks("a b c")).unwrap(), 0.0);
}

#[test]
fn wer_spec_examples() {
    assert_eq!(wer(&toks("a x c"), &toks("a b c d")).unwrap(), 0.5);
    assert_eq!(wer(&toks(""), &toks("a b c d e")).unwrap(), 1.0);
    assert!(wer(&toks("a"), &toks("")).is_err());
}

#[test]
fn sentence_bleu_examples() {
    let r = toks("a b c d");
    assert_eq!(sentence_bleu(&r, &r).unwrap(), 100.0);
    assert_eq!(sentence_bleu(&toks(""), &r).unwrap(), 0.0);
    // precisions 3/3, (2+1)/(2+1), (1+1)/(1+1), (0+1)/(0+1); BP exp(1 - 4/3)
    let want = 100.0 * (1.0 - 4.0 / 3.0f64).exp();
    assert!((sentence_bleu(&toks("a b c"), &r).unwrap() - want).abs() < 1e-12);
}

#[test]
fn reward_to_go_examples() {
    let r = toks("a b c d e f");
    assert_eq!(bleu_reward_to_go(&r[..3], &r[..3], &r).unwrap(), 0.0);
    assert_eq!(bleu_reward_to_go(&[], &r, &r).unwrap(), 100.0);
    let half = sentence_bleu(&r[..3], &r).unwrap();
    assert!((bleu_reward_to_go(&r[..3], &r, &r).unwrap() - (100.0 - half)).abs() < 1e-12);
    assert!(bleu_reward_to_go(&toks("x"), &r, &r).is_err());
    assert_eq!(ter_reward_to_go(&[], &r, &r).unwrap(), 100.0);
    let long = toks("x y z w v u t s r q p o n");
    assert_eq!(ter_reward_to_go(&long[..1], &long, &r).unwrap(), 0.0);
}

#[test]
fn randomization_test_examples() {
    let refs: Vec<Vec<u32>> = (0..100).map(|i| vec![i % 7, 1 + i % 5, 2, 3, 4]).collect();
    let perfect: Vec<BleuStats> = refs.iter().map(|x| BleuStats::from_pair(x, x)).collect();
    let zero: Vec<BleuStats> = refs.iter().map(|x| BleuStats::from_pair(&[99u32, 98], x)).collect();
    assert_eq!(paired_randomization_test(&perfect, &perfect, 1000, 1).unwrap(), 1.0);
    assert!(paired_randomization_test(&perfect, &zero, 1000, 1).unwrap() < 0.005);
    let p = paired_randomization_test(&perfect[..1], &zero[..1], 1000, 1).unwrap();
    assert!(p >= 0.5, "{p}");
    assert!(paired_randomization_test(&perfect[..2], &zero[..1], 1000, 1).is_err());
}

#[test]
fn histogram_examples() {
    let pairs = vec![(toks("a b"), toks("a b")), (toks("a"), toks("a b"))];
    let h = wer_histogram(&pairs, 0.25).unwrap();
    let counts: Vec<usize> = h.iter().map(|b| b.count).collect();
    assert_eq!(counts, vec![1, 0, 1]);
    let empty: Vec<(Vec<&str>, Vec<&str>)> = Vec::new();
    assert!(wer_histogram(&empty, 0.25).unwrap().is_empty());
}

fn corpus_strategy() -> impl Strategy<Value = Vec<(Vec<u32>, Vec<u32>)>> {
    prop::collection::vec(
        (prop::collection::vec(0u32..5, 0..10), prop::collection::vec(0u32..5, 1..10)),
        1..12,
    )
}

proptest! {
    #[test]
    fn bleu_is_order_invariant(mut pairs in corpus_strategy(), seed in 0u64..1000) {
        let (h, r): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let a = corpus_bleu(&h, &r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..pairs.len()).rev() {
            pairs.swap(i, rng.gen_range(0..=i));
        }
        let (h2, r2): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        prop_assert!((a - corpus_bleu(&h2, &r2).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn corpus_stats_are_sums(pairs in corpus_strategy()) {
        let mut total = BleuStats::default();
        for (h, r) in &pairs {
            total.add(&BleuStats::from_pair(h, r));
        }
        let (h, r): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        prop_assert_eq!(total, imitkd::metrics::corpus_stats(&h, &r).unwrap());
        for n in 0..4 {
            prop_assert!(total.matches[n] <= total.totals[n]);
        }
    }

    #[test]
    fn sentence_bleu_equals_corpus_bleu_without_zero_precision(
        r in prop::collection::vec(0u32..4, 4..10),
        edits in prop::collection::vec((0usize..10, 0u32..4), 0..3),
    ) {
        let mut h = r.clone();
        for (i, t) in edits {
            let i = i % h.len();
            h[i] = t;
        }
        let s = BleuStats::from_pair(&h, &r);
        if s.matches.iter().all(|&m| m > 0) {
            prop_assert_eq!(sentence_bleu(&h, &r).unwrap(), corpus_bleu(&[h.clone()], &[r.clone()]).unwrap());
        }
    }

    #[test]
    fn ter_never_exceeds_wer(h in prop::collection::vec(0u32..5, 0..12), r in prop::collection::vec(0u32..5, 1..12)) {
        let t = ter_summary(&h, &r).unwrap();
        prop_assert!(t.errors() as usize <= levenshtein(&h, &r));
        prop_assert!(ter(&h, &r).unwrap() <= wer(&h, &r).unwrap() + 1e-12);
    }

    #[test]
    fn randomization_test_of_identical_systems_is_one(pairs in corpus_strategy(), seed in 0u64..100) {
        let stats: Vec<BleuStats> = pairs.iter().map(|(h, r)| BleuStats::from_pair(h, r)).collect();
        prop_assert_eq!(paired_randomization_test(&stats, &stats, 1000, seed).unwrap(), 1.0);
    }
}
