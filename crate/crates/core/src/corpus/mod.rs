//! Synthetic speech-translation task: a deterministic language pair, an
//! acoustic rendering channel, an ASR-style noise channel and corpus files.

mod io;
mod noise;
mod sequence;
mod task;
mod vocab;

pub use io::{load_corpus, parse_corpus, render_corpus, save_corpus};
pub use noise::{corrupt_transcript, NoiseChannelConfig};
pub use sequence::{ParallelExample, Role, TokenSequence, T_MAX};
pub use task::{
    generate_corpus, render_acoustic, split_of, Lexicon, Split, SplitCorpus, TaskParams, TaskSpec,
    Vocabularies,
};
pub use vocab::{TokenId, Vocabulary, BOS, EOS, PAD, RESERVED, UNK};
