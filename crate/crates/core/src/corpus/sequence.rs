use serde::{Deserialize, Serialize};

use super::vocab::{TokenId, EOS, PAD};

/// Hard cap on sequence length, end-of-sequence included.
pub const T_MAX: usize = 64;

/// Which channel a sequence belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Transcript,
    Acoustic,
    Translation,
}

/// Token ids tagged with their channel. Complete sequences end with exactly
/// one end-of-sequence marker; prefixes carry none.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    role: Role,
    ids: Vec<TokenId>,
}

impl TokenSequence {
    /// Complete sequence from a body without end marker. Bodies longer than
    /// `T_MAX - 1` are truncated with a warning.
    pub fn complete(role: Role, body: impl Into<Vec<TokenId>>) -> Self {
        let mut ids: Vec<TokenId> = body.into();
        debug_assert!(!ids.contains(&PAD) && !ids.contains(&EOS));
        if ids.len() > T_MAX - 1 {
            log::warn!(
                "truncating {role:?} sequence of length {} to {}",
                ids.len() + 1,
                T_MAX
            );
            ids.truncate(T_MAX - 1);
        }
        ids.push(EOS);
        Self { role, ids }
    }

    /// Complete sequence from ids that may or may not already end with EOS
    /// (decoder output). Unfinished outputs that hit the length limit lose
    /// their last token to the end marker.
    pub fn from_decoded(role: Role, ids: &[TokenId]) -> Self {
        let body = match ids.iter().position(|&t| t == EOS) {
            Some(p) => &ids[..p],
            None => &ids[..ids.len().min(T_MAX - 1)],
        };
        Self::complete(role, body.to_vec())
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// All ids including the trailing end marker.
    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }

    /// Ids without the trailing end marker.
    pub fn body(&self) -> &[TokenId] {
        match self.ids.last() {
            Some(&EOS) => &self.ids[..self.ids.len() - 1],
            _ => &self.ids,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.ids.last() == Some(&EOS)
    }
}

/// One training item: gold transcript, acoustic rendering, reference
/// translation and (after an ASR pass) a synthetic transcript.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParallelExample {
    pub transcript: TokenSequence,
    pub acoustic: TokenSequence,
    pub translation: TokenSequence,
    pub synthetic: Option<TokenSequence>,
}

impl ParallelExample {
    /// Transcript fed to the expert: the synthetic one when requested.
    pub fn expert_input(&self, synthetic: bool) -> Option<&TokenSequence> {
        if synthetic {
            self.synthetic.as_ref()
        } else {
            Some(&self.transcript)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_appends_single_eos() {
        let s = TokenSequence::complete(Role::Translation, vec![5, 6]);
        assert_eq!(s.ids(), &[5, 6, EOS]);
        assert_eq!(s.body(), &[5, 6]);
        assert!(s.is_complete());
    }

    #[test]
    fn long_sequences_truncated() {
        let s = TokenSequence::complete(Role::Acoustic, vec![7; 100]);
        assert_eq!(s.len(), T_MAX);
        assert_eq!(s.ids().iter().filter(|&&t| t == EOS).count(), 1);
    }

    #[test]
    fn decoded_output_cut_at_first_eos() {
        let s = TokenSequence::from_decoded(Role::Translation, &[4, 5, EOS]);
        assert_eq!(s.body(), &[4, 5]);
        let s = TokenSequence::from_decoded(Role::Translation, &[4, 5]);
        assert_eq!(s.ids(), &[4, 5, EOS]);
    }
}
