use std::fmt;

use rand::Rng;

use super::eval::{score_hypotheses, Evaluation};
use crate::corpus::{ParallelExample, Role, TokenId, TokenSequence};
use crate::decode::{beam_decode, continue_decode, greedy_decode, DecodeConfig};
use crate::policy::Policy;
use crate::rng::rng_for;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeasibilitySystem {
    /// Student greedy decode of the acoustic input.
    AstOnly,
    /// ASR transcribes, the expert translates the transcript.
    Cascade,
    /// Student prefix, expert completes reading the gold transcript.
    GoldCompletion,
    /// Student prefix, expert completes reading the ASR transcript.
    SyntheticCompletion,
}

impl FeasibilitySystem {
    pub const ALL: [FeasibilitySystem; 4] = [
        FeasibilitySystem::AstOnly,
        FeasibilitySystem::Cascade,
        FeasibilitySystem::GoldCompletion,
        FeasibilitySystem::SyntheticCompletion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeasibilitySystem::AstOnly => "ast",
            FeasibilitySystem::Cascade => "cascade",
            FeasibilitySystem::GoldCompletion => "ast+expert(gold)",
            FeasibilitySystem::SyntheticCompletion => "ast+expert(synthetic)",
        }
    }
}

impl fmt::Display for FeasibilitySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityConfig {
    /// Beam size of the ASR pass producing the synthetic transcripts.
    pub asr_beam: usize,
    /// Cut every partial hypothesis at this step (clamped to its length)
    /// instead of a uniformly drawn one.
    pub fixed_cut: Option<usize>,
    pub seed: u64,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self {
            asr_beam: 5,
            fixed_cut: None,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityRow {
    pub student: String,
    pub system: FeasibilitySystem,
    pub evaluation: Evaluation,
}

/// Cut step of example `index`: uniform in `0..=len` unless fixed.
pub fn cut_step(cfg: &FeasibilityConfig, index: u64, len: usize) -> usize {
    match cfg.fixed_cut {
        Some(k) => k.min(len),
        None => rng_for(cfg.seed, index).gen_range(0..=len),
    }
}

/// Four rows per student: AST-only, cascade, and the student's greedy
/// prefix cut at a random step then completed greedily by the expert from
/// the gold or the synthetic transcript. Corpus BLEU against references.
pub fn feasibility_eval<S: Policy, E: Policy, A: Policy>(
    students: &[(&str, &S)],
    expert: &E,
    asr: &A,
    examples: &[ParallelExample],
    cfg: &FeasibilityConfig,
) -> Result<Vec<FeasibilityRow>> {
    let greedy = DecodeConfig::greedy();
    let asr_cfg = DecodeConfig::beam(cfg.asr_beam);
    let refs: Vec<&[TokenId]> = examples.iter().map(|e| e.translation.body()).collect();
    let mut synthetic = Vec::with_capacity(examples.len());
    let mut cascade = Vec::with_capacity(examples.len());
    for ex in examples {
        let t = beam_decode(asr, ex.acoustic.ids(), &asr_cfg)?;
        let t = TokenSequence::from_decoded(Role::Transcript, &t.tokens);
        cascade.push(greedy_decode(expert, t.ids(), &greedy)?.body().to_vec());
        synthetic.push(t);
    }
    let cascade = score_hypotheses(cascade, &refs)?;
    let mut rows = Vec::with_capacity(4 * students.len());
    for &(name, student) in students {
        let (mut ast, mut gold, mut synth) = (Vec::new(), Vec::new(), Vec::new());
        for (i, ex) in examples.iter().enumerate() {
            let h = greedy_decode(student, ex.acoustic.ids(), &greedy)?;
            let body = h.body();
            let k = cut_step(cfg, i as u64, body.len());
            let prefix = &body[..k];
            gold.push(continue_decode(expert, ex.transcript.ids(), prefix, &greedy)?.body().to_vec());
            synth.push(continue_decode(expert, synthetic[i].ids(), prefix, &greedy)?.body().to_vec());
            ast.push(body.to_vec());
        }
        for (system, hyps) in [
            (FeasibilitySystem::AstOnly, Some(ast)),
            (FeasibilitySystem::Cascade, None),
            (FeasibilitySystem::GoldCompletion, Some(gold)),
            (FeasibilitySystem::SyntheticCompletion, Some(synth)),
        ] {
            let evaluation = match hyps {
                Some(h) => score_hypotheses(h, &refs)?,
                None => cascade.clone(),
            };
            rows.push(FeasibilityRow {
                student: name.to_string(),
                system,
                evaluation,
            });
        }
    }
    Ok(rows)
}

/// TSV `student system BLEU TER`.
pub fn render_feasibility(rows: &[FeasibilityRow]) -> String {
    let mut out = String::from("student\tsystem\tBLEU\tTER\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{:.4}\t{:.4}\n",
            r.student, r.system, r.evaluation.bleu, r.evaluation.ter
        ));
    }
    out
}
