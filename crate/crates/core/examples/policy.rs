//! Trains a small encoder-decoder on a copy-and-reverse toy mapping with the
//! label-smoothed cross-entropy, then checks gradients and saves a checkpoint.

use imitkd::corpus::{TokenId, EOS};
use imitkd::policy::{
    apply_update, gradient_check, load_checkpoint, save_checkpoint, smoothed_ce_loss, NeuralSeq2SeqPolicy,
    Optimizer, OptimizerConfig, Seq2SeqConfig, LABEL_SMOOTHING,
};

fn main() -> imitkd::Result<()> {
    let data: Vec<(Vec<TokenId>, Vec<TokenId>)> = (0..40u32)
        .map(|i| {
            let src: Vec<TokenId> = (0..3 + i % 3).map(|k| 4 + (i * 7 + k * 3) % 6).collect();
            let mut tgt: Vec<TokenId> = src.iter().rev().copied().collect();
            let mut s = src;
            s.push(EOS);
            tgt.push(EOS);
            (s, tgt)
        })
        .collect();
    let pairs: Vec<(&[TokenId], &[TokenId])> = data.iter().map(|(s, t)| (s.as_slice(), t.as_slice())).collect();
    let mut model = NeuralSeq2SeqPolicy::new(Seq2SeqConfig::new(10, 10).with_dims(16, 32), 1)?;
    let err = gradient_check(&model, |m| smoothed_ce_loss(m, &pairs[..3], LABEL_SMOOTHING), 1e-5, 50, 1)?;
    println!("gradient check max relative error {err:.2e}");
    let mut opt = Optimizer::new(OptimizerConfig {
        learning_rate: 0.01,
        ..OptimizerConfig::default()
    })?;
    for epoch in 1..=60 {
        let out = smoothed_ce_loss(&model, &pairs, LABEL_SMOOTHING)?;
        apply_update(&mut model, &out.grads, &mut opt)?;
        if epoch % 20 == 0 {
            println!("step {epoch}: loss {:.4}", out.loss);
        }
    }
    let path = std::env::temp_dir().join("imitkd-policy-example.ckpt");
    save_checkpoint(&path, &model, Some(&opt))?;
    let back = load_checkpoint(&path)?;
    println!("checkpoint round trip identical: {}", back.model == model);
    Ok(())
}
