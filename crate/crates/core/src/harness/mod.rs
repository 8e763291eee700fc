//! Experiment orchestration: configuration, pretraining of the expert and
//! the ASR student, the eight training variants, evaluation, feasibility
//! and distilled-corpus experiments, reports and the workdir layout used by
//! the command-line tool.

mod config;
mod distill;
mod eval;
mod feasibility;
pub mod pipeline;
mod pretrain;
mod report;
mod train;
mod workdir;

pub use config::{
    apply_override, ExperimentConfig, ModelDims, PretrainConfig, ReportConfig, TaskConfig, Variant, VariantConfig,
};
pub use distill::{build_distilled_corpus, changed_fraction, DistillSource};
pub use eval::{
    channels_of, evaluate, evaluate_checkpoint, input_of, reference_of, score_hypotheses, Evaluation, InputChannel,
    OutputChannel,
};
pub use feasibility::{
    cut_step, feasibility_eval, render_feasibility, FeasibilityConfig, FeasibilityRow, FeasibilitySystem,
};
pub use pretrain::{
    ce_pass, corpus_wer, fresh_model, noisy_prefix_pass, pretrain_asr, pretrain_expert, sentence_accuracy,
    AsrReport, EpochRecord, ExpertReport,
};
pub use report::{build_report, EvaluationReport, ReportRow, ScoredRun, TSV_HEADER};
pub use train::{check_prerequisites, teacher_forced_train, train_variant, Prerequisites, TeacherForced, TrainOutcome};
pub use workdir::{load_model_file, RunInfo, Workdir};
