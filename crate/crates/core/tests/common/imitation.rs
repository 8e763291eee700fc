//! Tiny task, models and oracles for the imitation-learning checks.

use imitkd::corpus::{ParallelExample, SplitCorpus, TaskParams, TaskSpec, EOS};
use imitkd::harness::{fresh_model, ModelDims};
use imitkd::imitation::{collect_aggrevate, collect_dagger, rollin, IterationConfig, OracleInput, TargetMode};
use imitkd::policy::{DaggerTarget, NeuralSeq2SeqPolicy, TabularPolicy};

pub fn tiny_params() -> TaskParams {
    TaskParams {
        source_vocab_size: 8,
        target_vocab_size: 10,
        min_len: 2,
        max_len: 5,
        acoustic_vocab_size: 6,
        ..TaskParams::default()
    }
}

pub fn tiny_corpus(n: usize) -> (TaskSpec, SplitCorpus) {
    let spec = TaskSpec::generate(&tiny_params(), 3).unwrap();
    let c = SplitCorpus::generate(&spec, n, 4).unwrap();
    (spec, c)
}

pub const DIMS: ModelDims = ModelDims {
    emb_dim: 6,
    hidden_dim: 8,
};

pub struct Models {
    pub student: NeuralSeq2SeqPolicy,
    pub expert: NeuralSeq2SeqPolicy,
}

pub fn models(spec: &TaskSpec) -> Models {
    let v = spec.vocabularies();
    Models {
        student: fresh_model(DIMS, &v.acoustic, &v.target, 1).unwrap(),
        expert: fresh_model(DIMS, &v.source, &v.target, 2).unwrap(),
    }
}

/// ASR oracle that transcribes every listed example without error.
pub fn perfect_asr(spec: &TaskSpec, examples: &[ParallelExample]) -> TabularPolicy {
    let v = spec.vocabularies();
    let mut p = TabularPolicy::uniform(v.source.len(), v.acoustic.len());
    for ex in examples {
        let ids = ex.transcript.ids();
        for t in 0..ids.len() {
            let mut row = vec![0.0; v.source.len()];
            row[ids[t] as usize] = 1.0;
            p.set_for(ex.acoustic.ids(), &ids[..t], row).unwrap();
        }
    }
    p
}

pub fn eos_student(vocab: usize, src_vocab: usize) -> TabularPolicy {
    let mut row = vec![0.1 / (vocab - 1) as f64; vocab];
    row[EOS as usize] = 0.9;
    let s: f64 = row.iter().sum();
    row[0] += 1.0 - s;
    TabularPolicy::uniform(vocab, src_vocab).with_default(row).unwrap()
}

pub fn iteration(mode: TargetMode, input: OracleInput) -> IterationConfig {
    IterationConfig {
        iterations: 3,
        batch_size: 4,
        examples_per_iteration: 10,
        target_mode: mode,
        oracle_input: input,
        ..IterationConfig::default()
    }
}

/// Observed frequency of reference roll-ins over `n` seeds for each β.
pub fn rollin_frequencies(betas: &[f64], n: usize) -> Result<Vec<(f64, f64)>, String> {
    let (spec, c) = tiny_corpus(20);
    let v = spec.vocabularies();
    let student = eos_student(v.target.len(), v.acoustic.len());
    let ex = &c.train[0];
    let mut out = Vec::new();
    for &beta in betas {
        let mut hits = 0;
        for s in 0..n {
            if rollin(ex, &student, beta, s as u64).map_err(|e| e.to_string())? == ex.translation {
                hits += 1;
            }
        }
        out.push((beta, hits as f64 / n as f64));
    }
    Ok(out)
}

/// Dagger yields one record per rolled-in position (end token included)
/// and AggreVaTe one per example.
pub fn check_record_counts() -> Result<(), String> {
    let (spec, mut c) = tiny_corpus(30);
    let m = models(&spec);
    let cfg = iteration(TargetMode::Distribution, OracleInput::Gold);
    let e = |r: imitkd::Error| r.to_string();
    for beta in [1.0, 0.0, 0.5] {
        let recs = collect_dagger(&mut c.train[..8], &m.student, &m.expert, None::<&TabularPolicy>, &cfg, beta, 9, 0)
            .map_err(e)?;
        let mut expected = 0;
        for (k, ex) in c.train[..8].iter().enumerate() {
            let y = rollin(ex, &m.student, beta, imitkd::rng::derive_seed(9, k as u64)).map_err(e)?;
            expected += y.len();
            if beta == 1.0 && y != ex.translation {
                return Err("β = 1 roll-in left the reference".into());
            }
        }
        if recs.len() != expected {
            return Err(format!("β {beta}: {} Dagger records for {expected} positions", recs.len()));
        }
        for r in &recs {
            let DaggerTarget::Distribution(q) = &r.target else {
                return Err("distribution target expected".into());
            };
            if (q.iter().sum::<f64>() - 1.0).abs() >= 1e-9 {
                return Err("expert target not normalized".into());
            }
        }
        let agg = collect_aggrevate(&mut c.train[..9], &m.student, &m.expert, None::<&TabularPolicy>, &cfg, beta, 4, 0)
            .map_err(e)?;
        if agg.len() != 9 {
            return Err(format!("β {beta}: {} AggreVaTe records for 9 examples", agg.len()));
        }
    }
    Ok(())
}
