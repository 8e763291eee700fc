//! Dagger on a small task: a briefly pretrained expert corrects the
//! student on prefixes rolled in with a decaying β.

use imitkd::corpus::{SplitCorpus, TaskParams, TaskSpec};
use imitkd::harness::{fresh_model, pretrain_expert, ModelDims, PretrainConfig};
use imitkd::imitation::{collect_dagger, dagger_train, render_stats, BetaSchedule, IterationConfig};
use imitkd::policy::{Optimizer, OptimizerConfig, TabularPolicy};

fn main() -> imitkd::Result<()> {
    let params = TaskParams {
        source_vocab_size: 10,
        target_vocab_size: 12,
        max_len: 5,
        acoustic_vocab_size: 8,
        ..TaskParams::default()
    };
    let spec = TaskSpec::generate(&params, 1)?;
    let mut corpus = SplitCorpus::generate(&spec, 400, 2)?;
    let v = spec.vocabularies();
    let dims = ModelDims {
        emb_dim: 16,
        hidden_dim: 24,
    };
    let pre = PretrainConfig {
        dims: ModelDims {
            emb_dim: 24,
            hidden_dim: 32,
        },
        epochs: 6,
        min_epochs: 6,
        target_accuracy: 0.0,
        optimizer: OptimizerConfig {
            learning_rate: 0.01,
            ..OptimizerConfig::default()
        },
        ..PretrainConfig::default()
    };
    let (expert, report) = pretrain_expert(&corpus.train, &corpus.dev, &v, &pre, 3)?;
    println!("expert dev accuracy {:.3}", report.dev_accuracy);
    let mut student = fresh_model(dims, &v.acoustic, &v.target, 4)?;
    let cfg = IterationConfig {
        iterations: 5,
        batch_size: 16,
        ..IterationConfig::default()
    };
    let records = collect_dagger(&mut corpus.train[..4], &student, &expert, None::<&TabularPolicy>, &cfg, 0.5, 1, 0)?;
    println!("{} corrections from 4 roll-ins", records.len());
    let schedule = BetaSchedule::reaching(0.1, cfg.iterations);
    let mut opt = Optimizer::new(OptimizerConfig {
        learning_rate: 0.01,
        ..OptimizerConfig::default()
    })?;
    let stats = dagger_train(
        &mut student,
        &expert,
        None::<&TabularPolicy>,
        &mut corpus.train,
        &corpus.dev,
        &schedule,
        &cfg,
        &mut opt,
        &mut (),
    )?;
    print!("{}", render_stats(&stats));
    Ok(())
}
