//! Evaluation metrics: BLEU, TER, WER, reward-to-go, paired approximate
//! randomization and WER histograms. All functions are generic over token
//! type so they work on ids and on plain strings alike.

mod bleu;
pub mod edit;
mod histogram;
mod reward;
mod significance;

pub use bleu::{corpus_bleu, corpus_stats, sentence_bleu, BleuStats, MAX_ORDER};
pub use edit::{levenshtein, ter, ter_summary, wer, wer_summary, EditSummary};
pub use histogram::{render_histogram, wer_histogram, HistogramBin};
pub use reward::{bleu_reward_to_go, ter_quality, ter_reward_to_go};
pub use significance::{paired_randomization_test, CorpusStatistic, DEFAULT_TRIALS};
