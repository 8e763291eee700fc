//! Greedy and beam search on a hand-built tabular policy where the greedy
//! choice is a trap, plus expert-style top-k inspection.

use imitkd::corpus::EOS;
use imitkd::decode::{beam_decode, greedy_decode, oracle_continuation, topk_inspect, DecodeConfig};
use imitkd::policy::TabularPolicy;

fn main() -> imitkd::Result<()> {
    // tokens: 0 pad, 1 bos, 2 eos, 3 "a", 4 "b"
    let mut p = TabularPolicy::uniform(5, 5);
    p.set(&[], vec![0.0, 0.0, 0.0, 0.6, 0.4])?;
    p.set(&[3], vec![0.0, 0.0, 0.4, 0.3, 0.3])?;
    p.set(&[4], vec![0.0, 0.0, 1.0, 0.0, 0.0])?;
    let src = [3, EOS];
    let cfg = DecodeConfig {
        t_max: 4,
        ..DecodeConfig::greedy()
    };
    let g = greedy_decode(&p, &src, &cfg)?;
    let b = beam_decode(&p, &src, &DecodeConfig { beam_size: 3, ..cfg })?;
    println!("greedy {:?} log-prob {:.3}", g.tokens, g.log_prob);
    println!("beam   {:?} log-prob {:.3}", b.tokens, b.log_prob);
    let c = oracle_continuation(&p, &src, &[], 4, &cfg)?;
    println!("forced continuation after 'b': {:?}", c.tokens);
    for (tok, prob) in topk_inspect(&p, &src, &[3], 3)? {
        println!("after 'a': token {tok} p {prob:.2}");
    }
    Ok(())
}
