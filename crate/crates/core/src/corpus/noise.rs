use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sequence::{Role, TokenSequence};
use super::vocab::{TokenId, Vocabulary};
use crate::rng::rng;
use crate::{Error, Result};

/// Token-level substitution/deletion/insertion channel standing in for ASR
/// decoding errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseChannelConfig {
    pub p_sub: f64,
    pub p_del: f64,
    pub p_ins: f64,
    pub seed: u64,
}

impl NoiseChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.p_sub) || !ok(self.p_del) || !ok(self.p_ins) {
            return Err(Error::Config("noise rates must lie in [0, 1]".into()));
        }
        if self.p_sub + self.p_del > 1.0 {
            return Err(Error::Config("p_sub + p_del must not exceed 1".into()));
        }
        Ok(())
    }

    /// Expected edits per reference token when no two errors interact.
    pub fn expected_wer(&self) -> f64 {
        self.p_sub + self.p_del + self.p_ins
    }
}

pub fn corrupt_transcript(
    transcript: &TokenSequence,
    vocab: &Vocabulary,
    cfg: &NoiseChannelConfig,
) -> Result<TokenSequence> {
    cfg.validate()?;
    let content: Vec<TokenId> = vocab.content_ids().collect();
    let mut r = rng(cfg.seed);
    let mut out = Vec::with_capacity(transcript.body().len() + 2);
    for &tok in transcript.body() {
        let u: f64 = r.gen();
        if u < cfg.p_sub && content.len() > 1 {
            // uniform over the other content tokens
            let mut pick = content[r.gen_range(0..content.len() - 1)];
            if pick >= tok {
                pick += 1;
            }
            out.push(pick);
        } else if u < cfg.p_sub + cfg.p_del {
        } else {
            out.push(tok);
        }
        if cfg.p_ins > 0.0 && r.gen::<f64>() < cfg.p_ins && !content.is_empty() {
            out.push(content[r.gen_range(0..content.len())]);
        }
    }
    Ok(TokenSequence::complete(Role::Transcript, out))
}
