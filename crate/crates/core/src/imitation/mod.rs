//! Imitation learning with an expert in the loop: β-mixture roll-in,
//! Dagger corrections and AggreVaTe reward-to-go regression, trained on a
//! fresh dataset per iteration.

mod collect;
mod dump;
mod schedule;
mod train;

pub use collect::{
    attach_synthetic, collect_aggrevate, collect_dagger, rollin, IterationConfig, OracleInput, RewardMetric,
    TargetMode,
};
pub use dump::{render_aggrevate_records, render_dagger_records};
pub use schedule::{beta_at, BetaSchedule};
pub use train::{
    aggrevate_train, dagger_train, dev_bleu, iteration_chunks, render_stats, step, IterationStats, Observer,
    MAX_AGGREVATE_EPOCHS,
};
