//! Tiny models and data for gradient and loss checks.

use std::sync::Arc;

use imitkd::corpus::{TokenId, EOS};
use imitkd::policy::{
    aggrevate_loss, gradient_check, ikd_loss, ikd_plus_loss, kd_plus_loss, prefix_outputs, smoothed_ce_loss,
    AggrevateRecord, DaggerRecord, DaggerTarget, KdItem, NeuralSeq2SeqPolicy, Seq2SeqConfig, LABEL_SMOOTHING,
};

pub const COORDS: usize = 210;
pub const EPS: f64 = 1e-5;

pub fn tiny(seed: u64) -> NeuralSeq2SeqPolicy {
    NeuralSeq2SeqPolicy::new(Seq2SeqConfig::new(10, 9).with_dims(5, 6), seed).unwrap()
}

pub fn data() -> Vec<(Vec<TokenId>, Vec<TokenId>)> {
    vec![
        (vec![4, 7, 9, 5, EOS], vec![5, 6, 8, EOS]),
        (vec![6, 4, EOS], vec![7, 4, EOS]),
        (vec![8, 8, 5, 4, 9, 6, EOS], vec![4, 8, 8, 6, 5, EOS]),
    ]
}

pub fn expert_dists(expert: &NeuralSeq2SeqPolicy, src: &[TokenId], tgt: &[TokenId]) -> Vec<Vec<f64>> {
    prefix_outputs(expert, src, &tgt[..tgt.len() - 1]).unwrap().iter().map(|o| o.probs()).collect()
}

/// Records of a β = 1 roll-in: every reference prefix with its expert label.
pub fn reference_records(expert: &NeuralSeq2SeqPolicy, one_hot: bool) -> Vec<DaggerRecord> {
    let mut out = Vec::new();
    for (src, tgt) in data() {
        let s = Arc::new(src.clone());
        for (t, q) in expert_dists(expert, &src, &tgt).into_iter().enumerate() {
            let target = if one_hot {
                DaggerTarget::Token(imitkd::policy::argmax(&q))
            } else {
                DaggerTarget::Distribution(Arc::new(q))
            };
            out.push(DaggerRecord {
                prefix: tgt[..t].to_vec(),
                student_input: Arc::clone(&s),
                expert_input: Arc::clone(&s),
                target,
            });
        }
    }
    out
}

pub fn aggrevate_records() -> Vec<AggrevateRecord> {
    data()
        .into_iter()
        .enumerate()
        .map(|(i, (src, tgt))| AggrevateRecord {
            prefix: tgt[..i].to_vec(),
            student_input: Arc::new(src.clone()),
            expert_input: Arc::new(src),
            action: 4 + i as TokenId,
            reward: [35.0, -10.0, 80.0][i],
        })
        .collect()
}

/// Maximum relative finite-difference error of every loss.
pub fn gradient_errors() -> Result<Vec<(&'static str, f64)>, String> {
    let p = tiny(1);
    let expert = tiny(2);
    let d = data();
    let pairs: Vec<(&[TokenId], &[TokenId])> = d.iter().map(|(s, t)| (s.as_slice(), t.as_slice())).collect();
    let dists: Vec<Vec<Vec<f64>>> = d.iter().map(|(s, t)| expert_dists(&expert, s, t)).collect();
    let items = kd_items(&d, &dists);
    let soft = reference_records(&expert, false);
    let hard = reference_records(&expert, true);
    let agg = aggrevate_records();
    let e = |r: imitkd::Result<f64>| r.map_err(|e| e.to_string());
    Ok(vec![
        ("smoothed_ce", e(gradient_check(&p, |m| smoothed_ce_loss(m, &pairs, LABEL_SMOOTHING), EPS, COORDS, 1))?),
        ("kd_plus", e(gradient_check(&p, |m| kd_plus_loss(m, &items), EPS, COORDS, 2))?),
        ("ikd", e(gradient_check(&p, |m| ikd_loss(m, &hard), EPS, COORDS, 3))?),
        ("ikd_plus", e(gradient_check(&p, |m| ikd_plus_loss(m, &soft), EPS, COORDS, 4))?),
        ("aggrevate", e(gradient_check(&p, |m| aggrevate_loss(m, &agg), EPS, COORDS, 5))?),
    ])
}

pub fn kd_items<'a>(d: &'a [(Vec<TokenId>, Vec<TokenId>)], dists: &'a [Vec<Vec<f64>>]) -> Vec<KdItem<'a>> {
    d.iter()
        .zip(dists)
        .map(|((s, t), q)| KdItem {
            source: s,
            target: t,
            expert: q,
        })
        .collect()
}

/// Largest loss or gradient difference between the word-level KD loss and
/// the Dagger loss on reference-prefix records.
pub fn kd_plus_gap(seed: u64) -> Result<f64, String> {
    let p = tiny(seed);
    let expert = tiny(seed + 1);
    let d = data();
    let dists: Vec<Vec<Vec<f64>>> = d.iter().map(|(s, t)| expert_dists(&expert, s, t)).collect();
    let kd = kd_plus_loss(&p, &kd_items(&d, &dists)).map_err(|e| e.to_string())?;
    let ikd = ikd_plus_loss(&p, &reference_records(&expert, false)).map_err(|e| e.to_string())?;
    let mut gap = (kd.loss - ikd.loss).abs();
    for (a, b) in kd.grads.tensors.iter().zip(&ikd.grads.tensors) {
        for (x, y) in a.data.iter().zip(&b.data) {
            gap = gap.max((x - y).abs());
        }
    }
    Ok(gap)
}

/// Whether the distribution loss with one-hot targets reproduces the token
/// loss exactly.
pub fn one_hot_matches_ikd(seed: u64) -> Result<bool, String> {
    let p = tiny(seed);
    let expert = tiny(seed + 1);
    let hard = reference_records(&expert, true);
    let one_hot: Vec<DaggerRecord> = hard
        .iter()
        .map(|r| {
            let DaggerTarget::Token(t) = r.target else { unreachable!() };
            let mut q = vec![0.0; 9];
            q[t as usize] = 1.0;
            DaggerRecord {
                target: DaggerTarget::Distribution(Arc::new(q)),
                ..r.clone()
            }
        })
        .collect();
    let a = ikd_loss(&p, &hard).map_err(|e| e.to_string())?;
    let b = ikd_plus_loss(&p, &one_hot).map_err(|e| e.to_string())?;
    Ok(a.loss == b.loss && a.grads == b.grads)
}
