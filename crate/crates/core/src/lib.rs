//! Imitation-based knowledge distillation for sequence transduction.
//!
//! The crate simulates a speech-translation setting on a synthetic language
//! pair: a student transducer reads a noisy acoustic rendering of a source
//! sentence, while a frozen expert reads the clean (or ASR-produced)
//! transcript and corrects the student on prefixes the student itself
//! visits. Modules follow the pipeline:
//!
//! * [`corpus`]: synthetic task, acoustic and ASR-error channels, corpus files
//! * [`metrics`]: BLEU, TER, WER, reward-to-go, paired randomization test
//! * [`policy`]: differentiable seq2seq policies, losses, Adam, checkpoints
//! * [`decode`]: greedy/beam search, expert corrections and continuations
//! * [`imitation`]: Dagger and AggreVaTe data collection and training loops
//! * [`harness`]: pretraining, training variants, evaluation and reports

pub mod corpus;
pub mod decode;
mod error;
pub mod harness;
pub mod imitation;
pub mod metrics;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
