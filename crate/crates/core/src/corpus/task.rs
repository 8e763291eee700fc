use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sequence::{ParallelExample, Role, TokenSequence, T_MAX};
use super::vocab::{TokenId, Vocabulary, RESERVED};
use crate::rng::{derive_seed, rng, rng_for};
use crate::{Error, Result};

/// Maps each source token to one of its acoustic spellings. Entries are
/// indexed by source content index; spellings hold acoustic content indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub acoustic_vocab_size: usize,
    pub alternatives: Vec<Vec<Vec<u32>>>,
}

/// The synthetic language pair. Token references inside the tables are
/// content indices (vocabulary id minus the reserved block).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub source_vocab_size: usize,
    pub target_vocab_size: usize,
    /// Source content index -> 1 or 2 target content indices.
    pub mapping: Vec<Vec<u32>>,
    /// Source content index whose occurrence swaps the two target tokens
    /// that follow its own translation.
    pub reorder_trigger: Option<u32>,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
    pub lexicon: Lexicon,
}

/// Knobs for building a random [`TaskSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskParams {
    pub source_vocab_size: usize,
    pub target_vocab_size: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub fertility2_fraction: f64,
    pub reorder_trigger: bool,
    pub acoustic_vocab_size: usize,
    pub alternatives_per_token: usize,
    pub min_spelling: usize,
    pub max_spelling: usize,
    /// Fraction of source tokens that share one spelling with a partner.
    pub confusable_fraction: f64,
}

impl Default for TaskParams {
    fn default() -> Self {
        Self {
            source_vocab_size: 64,
            target_vocab_size: 72,
            min_len: 3,
            max_len: 12,
            fertility2_fraction: 0.25,
            reorder_trigger: true,
            acoustic_vocab_size: 16,
            alternatives_per_token: 2,
            min_spelling: 2,
            max_spelling: 4,
            confusable_fraction: 0.6,
        }
    }
}

/// The three vocabularies of a task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabularies {
    pub source: Vocabulary,
    pub acoustic: Vocabulary,
    pub target: Vocabulary,
}

impl TaskSpec {
    pub fn generate(params: &TaskParams, seed: u64) -> Result<Self> {
        let p = params;
        if p.source_vocab_size == 0 || p.target_vocab_size == 0 || p.acoustic_vocab_size == 0 {
            return Err(Error::Config("vocabulary sizes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p.fertility2_fraction)
            || !(0.0..=1.0).contains(&p.confusable_fraction)
        {
            return Err(Error::Config("fractions must lie in [0, 1]".into()));
        }
        if p.alternatives_per_token == 0 || p.min_spelling < 2 || p.max_spelling > 4 || p.min_spelling > p.max_spelling {
            return Err(Error::Config(
                "spellings need 2..=4 acoustic symbols and at least one alternative".into(),
            ));
        }
        let mut r = rng(derive_seed(seed, 0x7a5c));
        let n = p.source_vocab_size;

        // fertility: the trigger (last token) always translates to one token
        let n_double = ((p.fertility2_fraction * n as f64).round() as usize).min(n.saturating_sub(1));
        let mut order: Vec<usize> = (0..n - 1).collect();
        order.shuffle(&mut r);
        let mut fertility = vec![1usize; n];
        for &i in order.iter().take(n_double) {
            fertility[i] = 2;
        }
        let slots: usize = fertility.iter().sum();
        let mut targets: Vec<u32> = (0..p.target_vocab_size as u32).collect();
        targets.shuffle(&mut r);
        while targets.len() < slots {
            targets.push(r.gen_range(0..p.target_vocab_size as u32));
        }
        targets.truncate(slots);
        targets.shuffle(&mut r);
        let mut it = targets.into_iter();
        let mapping: Vec<Vec<u32>> = fertility
            .iter()
            .map(|&f| (0..f).map(|_| it.next().unwrap()).collect())
            .collect();
        let reorder_trigger = p.reorder_trigger.then_some((n - 1) as u32);

        let lexicon = Lexicon::generate(p, &mut r)?;
        let spec = Self {
            source_vocab_size: n,
            target_vocab_size: p.target_vocab_size,
            mapping,
            reorder_trigger,
            min_len: p.min_len,
            max_len: p.max_len,
            seed,
            lexicon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad(format!("invalid length range [{}, {}]", self.min_len, self.max_len));
        }
        if 2 * self.max_len + 1 > T_MAX {
            return bad(format!("max_len {} exceeds the sequence cap", self.max_len));
        }
        if self.mapping.len() != self.source_vocab_size {
            return bad("mapping table must cover every source token".into());
        }
        for (i, m) in self.mapping.iter().enumerate() {
            if m.is_empty() || m.len() > 2 {
                return bad(format!("source token {i} maps to {} target tokens", m.len()));
            }
            if m.iter().any(|&t| t as usize >= self.target_vocab_size) {
                return bad(format!("source token {i} maps outside the target vocabulary"));
            }
        }
        if let Some(t) = self.reorder_trigger {
            if t as usize >= self.source_vocab_size {
                return bad("reorder trigger outside the source vocabulary".into());
            }
        }
        let lex = &self.lexicon;
        if lex.alternatives.len() != self.source_vocab_size {
            return bad("lexicon must cover every source token".into());
        }
        for (i, alts) in lex.alternatives.iter().enumerate() {
            if alts.is_empty() {
                return bad(format!("source token {i} has no acoustic spelling"));
            }
            for a in alts {
                if !(2..=4).contains(&a.len()) || a.iter().any(|&s| s as usize >= lex.acoustic_vocab_size) {
                    return bad(format!("source token {i} has an invalid spelling {a:?}"));
                }
            }
        }
        Ok(())
    }

    pub fn vocabularies(&self) -> Vocabularies {
        Vocabularies {
            source: Vocabulary::numbered("s", self.source_vocab_size),
            acoustic: Vocabulary::numbered("a", self.lexicon.acoustic_vocab_size),
            target: Vocabulary::numbered("t", self.target_vocab_size),
        }
    }

    /// Applies the token table left to right, then performs one swap per
    /// trigger occurrence on the two target tokens after the trigger's output.
    pub fn translate(&self, transcript: &[TokenId]) -> Vec<TokenId> {
        let mut out: Vec<TokenId> = Vec::with_capacity(2 * transcript.len());
        let mut swaps = Vec::new();
        for &tok in transcript {
            let idx = tok as usize - RESERVED;
            out.extend(self.mapping[idx].iter().map(|&t| t + RESERVED as TokenId));
            if self.reorder_trigger == Some(idx as u32) {
                swaps.push(out.len());
            }
        }
        for k in swaps {
            if k + 1 < out.len() {
                out.swap(k, k + 1);
            }
        }
        out
    }

    /// Example `index` of the corpus seeded with `seed`.
    pub fn example(&self, seed: u64, index: u64) -> ParallelExample {
        let mut r = rng_for(seed, index);
        let len = r.gen_range(self.min_len..=self.max_len);
        let body: Vec<TokenId> = (0..len)
            .map(|_| (RESERVED + r.gen_range(0..self.source_vocab_size)) as TokenId)
            .collect();
        let translation = self.translate(&body);
        let transcript = TokenSequence::complete(Role::Transcript, body);
        let acoustic = render_acoustic(&transcript, &self.lexicon, r.gen())
            .expect("lexicon validated against the source vocabulary");
        ParallelExample {
            transcript,
            acoustic,
            translation: TokenSequence::complete(Role::Translation, translation),
            synthetic: None,
        }
    }
}

impl Lexicon {
    fn generate(p: &TaskParams, r: &mut impl Rng) -> Result<Self> {
        let n = p.source_vocab_size;
        let mut seen = std::collections::HashSet::new();
        let mut alternatives = Vec::with_capacity(n);
        for _ in 0..n {
            let mut alts = Vec::with_capacity(p.alternatives_per_token);
            for _ in 0..p.alternatives_per_token {
                let mut tries = 0;
                loop {
                    let len = r.gen_range(p.min_spelling..=p.max_spelling);
                    let spelling: Vec<u32> = (0..len)
                        .map(|_| r.gen_range(0..p.acoustic_vocab_size as u32))
                        .collect();
                    if seen.insert(spelling.clone()) {
                        alts.push(spelling);
                        break;
                    }
                    tries += 1;
                    if tries > 10_000 {
                        return Err(Error::Config(
                            "acoustic alphabet too small for distinct spellings".into(),
                        ));
                    }
                }
            }
            alternatives.push(alts);
        }
        // confusable pairs share their first spelling
        let n_conf = ((p.confusable_fraction * n as f64 / 2.0).round() as usize) * 2;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(r);
        for pair in order[..n_conf.min(n / 2 * 2)].chunks_exact(2) {
            let shared = alternatives[pair[0]][0].clone();
            alternatives[pair[1]][0] = shared;
        }
        Ok(Self {
            acoustic_vocab_size: p.acoustic_vocab_size,
            alternatives,
        })
    }
}

/// Deterministic synthetic corpus of `n` examples.
pub fn generate_corpus(spec: &TaskSpec, n: usize, seed: u64) -> Result<Vec<ParallelExample>> {
    if n == 0 {
        return Err(Error::Config("corpus size must be at least 1".into()));
    }
    spec.validate()?;
    Ok((0..n as u64).map(|i| spec.example(seed, i)).collect())
}

/// Concatenates one sampled spelling per transcript token.
pub fn render_acoustic(transcript: &TokenSequence, lexicon: &Lexicon, seed: u64) -> Result<TokenSequence> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(transcript.body().len() * 4);
    for &tok in transcript.body() {
        let alts = (tok as usize)
            .checked_sub(RESERVED)
            .and_then(|i| lexicon.alternatives.get(i))
            .filter(|a| !a.is_empty())
            .ok_or_else(|| Error::Data(format!("no lexicon entry for source token {tok}")))?;
        let pick = if alts.len() == 1 { 0 } else { r.gen_range(0..alts.len()) };
        out.extend(alts[pick].iter().map(|&s| s + RESERVED as TokenId));
    }
    Ok(TokenSequence::complete(Role::Acoustic, out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(Error::Usage(format!("unknown split {s:?}"))),
        }
    }
}

/// 80/10/10 assignment by a hash of the example index.
pub fn split_of(seed: u64, index: u64) -> Split {
    match derive_seed(seed ^ 0x5917, index) % 10 {
        0 => Split::Test,
        1 => Split::Dev,
        _ => Split::Train,
    }
}

/// Generated train/dev/test corpora; generation stops once `n_train`
/// training examples exist.
#[derive(Clone, Debug)]
pub struct SplitCorpus {
    pub train: Vec<ParallelExample>,
    pub dev: Vec<ParallelExample>,
    pub test: Vec<ParallelExample>,
}

impl SplitCorpus {
    pub fn generate(spec: &TaskSpec, n_train: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        if n_train == 0 {
            return Err(Error::Config("corpus size must be at least 1".into()));
        }
        let mut out = Self {
            train: Vec::with_capacity(n_train),
            dev: Vec::new(),
            test: Vec::new(),
        };
        let mut i = 0u64;
        while out.train.len() < n_train {
            let ex = spec.example(seed, i);
            match split_of(seed, i) {
                Split::Train => out.train.push(ex),
                Split::Dev => out.dev.push(ex),
                Split::Test => out.test.push(ex),
            }
            i += 1;
        }
        Ok(out)
    }

    pub fn get(&self, split: Split) -> &[ParallelExample] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    pub fn get_mut(&mut self, split: Split) -> &mut Vec<ParallelExample> {
        match split {
            Split::Train => &mut self.train,
            Split::Dev => &mut self.dev,
            Split::Test => &mut self.test,
        }
    }
}
