use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ParallelExample, Role, TokenId, TokenSequence};
use crate::decode::{beam_decode, greedy_decode, oracle_continuation, oracle_corrections, DecodeConfig};
use crate::metrics::{bleu_reward_to_go, ter_reward_to_go};
use crate::policy::{next_token_distribution, AggrevateRecord, DaggerRecord, DaggerTarget, Policy};
use crate::rng::rng_for;
use crate::{Error, Result};

/// Which transcript the expert reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleInput {
    Gold,
    Synthetic,
}

/// Dagger supervision: the expert's argmax or its full distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    Argmax,
    Distribution,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMetric {
    Bleu,
    Ter,
}

/// Settings shared by the Dagger and AggreVaTe loops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationConfig {
    pub iterations: usize,
    /// Examples per optimization step.
    pub batch_size: usize,
    /// Examples visited per iteration; 0 means the whole training set.
    pub examples_per_iteration: usize,
    pub oracle_input: OracleInput,
    pub target_mode: TargetMode,
    pub reward_metric: RewardMetric,
    /// Beam size of expert continuations (AggreVaTe).
    pub continuation_beam: usize,
    /// Beam size of the ASR pass producing synthetic transcripts.
    pub asr_beam: usize,
    /// Beam size of the dev evaluation after every iteration.
    pub dev_beam: usize,
    /// AggreVaTe early stopping: non-improving epochs tolerated.
    pub patience: usize,
    pub seed: u64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            batch_size: 32,
            examples_per_iteration: 0,
            oracle_input: OracleInput::Gold,
            target_mode: TargetMode::Distribution,
            reward_metric: RewardMetric::Bleu,
            continuation_beam: 5,
            asr_beam: 5,
            dev_beam: 1,
            patience: 10,
            seed: 1,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.continuation_beam == 0 || self.asr_beam == 0 || self.dev_beam == 0 {
            return Err(Error::Config("beam sizes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Reference translation with probability `beta`, otherwise the student's
/// greedy decode of the acoustic input. Deterministic in `seed`.
pub fn rollin<P: Policy>(example: &ParallelExample, student: &P, beta: f64, seed: u64) -> Result<TokenSequence> {
    let u: f64 = rng_for(seed, 0).gen();
    if u < beta {
        return Ok(example.translation.clone());
    }
    let h = greedy_decode(student, example.acoustic.ids(), &DecodeConfig::greedy())?;
    Ok(TokenSequence::from_decoded(Role::Translation, &h.tokens))
}

/// Fills in the synthetic transcript of every example that lacks one by
/// decoding its acoustic input with the ASR student.
pub fn attach_synthetic<A: Policy>(examples: &mut [ParallelExample], asr: &A, beam: usize) -> Result<()> {
    let cfg = DecodeConfig::beam(beam);
    for ex in examples.iter_mut().filter(|e| e.synthetic.is_none()) {
        let h = beam_decode(asr, ex.acoustic.ids(), &cfg)?;
        ex.synthetic = Some(TokenSequence::from_decoded(Role::Transcript, &h.tokens));
    }
    Ok(())
}

fn expert_source<A: Policy>(
    batch: &mut [ParallelExample],
    mode: OracleInput,
    asr: Option<&A>,
    asr_beam: usize,
) -> Result<()> {
    if mode == OracleInput::Synthetic {
        match asr {
            Some(a) => attach_synthetic(batch, a, asr_beam)?,
            None if batch.iter().all(|e| e.synthetic.is_some()) => {}
            None => {
                return Err(Error::Config(
                    "synthetic expert input needs an ASR student or cached transcripts".into(),
                ))
            }
        }
    }
    Ok(())
}

fn expert_input(ex: &ParallelExample, mode: OracleInput) -> &[TokenId] {
    ex.expert_input(mode == OracleInput::Synthetic)
        .expect("synthetic transcripts attached before collection")
        .ids()
}

/// Dagger data for one iteration: every example is rolled in with `beta`
/// (per-example stream `seed`, `first_index + k`) and the expert labels
/// every position of the rolled-in sequence, end-of-sequence included.
#[allow(clippy::too_many_arguments)]
pub fn collect_dagger<S: Policy, E: Policy, A: Policy>(
    batch: &mut [ParallelExample],
    student: &S,
    expert: &E,
    asr: Option<&A>,
    cfg: &IterationConfig,
    beta: f64,
    seed: u64,
    first_index: u64,
) -> Result<Vec<DaggerRecord>> {
    expert_source(batch, cfg.oracle_input, asr, cfg.asr_beam)?;
    let mut records = Vec::new();
    for (k, ex) in batch.iter().enumerate() {
        let y = rollin(ex, student, beta, crate::rng::derive_seed(seed, first_index + k as u64))?;
        let student_input = Arc::new(ex.acoustic.ids().to_vec());
        let expert_in = Arc::new(expert_input(ex, cfg.oracle_input).to_vec());
        let ids = y.ids();
        let outs = oracle_corrections(expert, &expert_in, &ids[..ids.len() - 1])?;
        for (t, (tok, out)) in outs.into_iter().enumerate() {
            let target = match cfg.target_mode {
                TargetMode::Argmax => DaggerTarget::Token(tok),
                TargetMode::Distribution => DaggerTarget::Distribution(Arc::new(out.probs())),
            };
            records.push(DaggerRecord {
                prefix: ids[..t].to_vec(),
                student_input: Arc::clone(&student_input),
                expert_input: Arc::clone(&expert_in),
                target,
            });
        }
    }
    Ok(records)
}

/// AggreVaTe data: one record per example at a uniformly drawn position.
#[allow(clippy::too_many_arguments)]
pub fn collect_aggrevate<S: Policy, E: Policy, A: Policy>(
    batch: &mut [ParallelExample],
    student: &S,
    expert: &E,
    asr: Option<&A>,
    cfg: &IterationConfig,
    beta: f64,
    seed: u64,
    first_index: u64,
) -> Result<Vec<AggrevateRecord>> {
    expert_source(batch, cfg.oracle_input, asr, cfg.asr_beam)?;
    let cont = DecodeConfig::beam(cfg.continuation_beam);
    let mut records = Vec::with_capacity(batch.len());
    for (k, ex) in batch.iter().enumerate() {
        let ex_seed = crate::rng::derive_seed(seed, first_index + k as u64);
        let y = rollin(ex, student, beta, ex_seed)?;
        let t = rng_for(ex_seed, 1).gen_range(1..=y.len());
        let prefix = &y.ids()[..t - 1];
        let action = next_token_distribution(student, ex.acoustic.ids(), prefix)?.argmax();
        let expert_in = expert_input(ex, cfg.oracle_input);
        let full = oracle_continuation(expert, expert_in, prefix, action, &cont)?;
        let reference = ex.translation.body();
        let reward = match cfg.reward_metric {
            RewardMetric::Bleu => bleu_reward_to_go(prefix, full.body(), reference)?,
            RewardMetric::Ter => ter_reward_to_go(prefix, full.body(), reference)?,
        };
        records.push(AggrevateRecord {
            prefix: prefix.to_vec(),
            student_input: Arc::new(ex.acoustic.ids().to_vec()),
            expert_input: Arc::new(expert_in.to_vec()),
            action,
            reward,
        });
    }
    Ok(records)
}
