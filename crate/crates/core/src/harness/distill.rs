use serde::{Deserialize, Serialize};

use crate::corpus::{ParallelExample, Role, TokenSequence};
use crate::decode::{beam_decode, DecodeConfig};
use crate::imitation::attach_synthetic;
use crate::policy::Policy;
use crate::{Error, Result};

/// Transcript the expert translates when building a distilled corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistillSource {
    Gold,
    Synthetic,
}

impl std::str::FromStr for DistillSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gold" => Ok(DistillSource::Gold),
            "synthetic" => Ok(DistillSource::Synthetic),
            _ => Err(Error::Usage(format!("unknown distillation source {s:?}; expected gold or synthetic"))),
        }
    }
}

/// Replaces every reference by the expert's beam translation of the gold
/// or synthetic transcript. Transcripts and acoustic inputs are kept.
/// Synthetic transcripts already present are reused; missing ones need `asr`.
pub fn build_distilled_corpus<E: Policy, A: Policy>(
    examples: &[ParallelExample],
    expert: &E,
    source: DistillSource,
    asr: Option<&A>,
    beam: usize,
) -> Result<Vec<ParallelExample>> {
    let mut out = examples.to_vec();
    if source == DistillSource::Synthetic {
        match asr {
            Some(a) => attach_synthetic(&mut out, a, beam)?,
            None if out.iter().all(|e| e.synthetic.is_some()) => {}
            None => return Err(Error::Config("synthetic distillation needs an ASR student".into())),
        }
    }
    let cfg = DecodeConfig::beam(beam);
    for ex in &mut out {
        let input = ex
            .expert_input(source == DistillSource::Synthetic)
            .expect("synthetic transcripts attached");
        let h = beam_decode(expert, input.ids(), &cfg)?;
        ex.translation = TokenSequence::from_decoded(Role::Translation, &h.tokens);
    }
    Ok(out)
}

/// Fraction of examples whose reference differs between two corpora.
pub fn changed_fraction(a: &[ParallelExample], b: &[ParallelExample]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let changed = a.iter().zip(b).filter(|(x, y)| x.translation != y.translation).count();
    changed as f64 / a.len() as f64
}
