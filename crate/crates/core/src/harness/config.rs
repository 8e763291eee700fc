use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::TaskParams;
use crate::decode::DecodeConfig;
use crate::imitation::{BetaSchedule, IterationConfig, OracleInput, TargetMode};
use crate::policy::OptimizerConfig;
use crate::{Error, Result};

/// The eight training variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Standard,
    KdPlus,
    SynthkdPlus,
    Ikd,
    IkdPlus,
    Synthikd,
    SynthikdPlus,
    Aggrevate,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Standard,
        Variant::KdPlus,
        Variant::SynthkdPlus,
        Variant::Ikd,
        Variant::IkdPlus,
        Variant::Synthikd,
        Variant::SynthikdPlus,
        Variant::Aggrevate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::KdPlus => "kd_plus",
            Variant::SynthkdPlus => "synthkd_plus",
            Variant::Ikd => "ikd",
            Variant::IkdPlus => "ikd_plus",
            Variant::Synthikd => "synthikd",
            Variant::SynthikdPlus => "synthikd_plus",
            Variant::Aggrevate => "aggrevate",
        }
    }

    pub fn needs_expert(self) -> bool {
        self != Variant::Standard
    }

    /// Transcript the expert reads, if the variant queries the expert.
    pub fn oracle_input(self) -> Option<OracleInput> {
        match self {
            Variant::Standard => None,
            Variant::SynthkdPlus | Variant::Synthikd | Variant::SynthikdPlus => Some(OracleInput::Synthetic),
            _ => Some(OracleInput::Gold),
        }
    }

    /// Dagger target mode for the imitation variants.
    pub fn dagger_target(self) -> Option<TargetMode> {
        match self {
            Variant::Ikd | Variant::Synthikd => Some(TargetMode::Argmax),
            Variant::IkdPlus | Variant::SynthikdPlus => Some(TargetMode::Distribution),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                Error::Usage(format!("unknown variant {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Width of a transducer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDims {
    pub emb_dim: usize,
    pub hidden_dim: usize,
}

/// Corpus generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub n_train: usize,
    pub params: TaskParams,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            n_train: 20_000,
            params: TaskParams::default(),
        }
    }
}

/// Teacher-forced pretraining of the expert or the ASR student.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub dims: ModelDims,
    /// Epoch budget.
    pub epochs: usize,
    /// Expert only: epochs run before the accuracy gate may stop training.
    pub min_epochs: usize,
    pub batch_size: usize,
    pub label_smoothing: f64,
    pub optimizer: OptimizerConfig,
    /// Expert only: required dev greedy sentence accuracy.
    pub target_accuracy: f64,
    /// ASR only: dev WER band outside which a warning is emitted.
    pub wer_band: [f64; 2],
    /// ASR only: beam size of the WER evaluation.
    pub eval_beam: usize,
    /// Expert only: rate of random decoder-input substitutions in an extra
    /// pass per epoch (0 = off).
    pub prefix_noise: f64,
    /// Expert only: learning-rate factor applied after an epoch whose dev
    /// accuracy does not beat the best so far (1 = off).
    pub plateau_decay: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            dims: ModelDims {
                emb_dim: 64,
                hidden_dim: 128,
            },
            epochs: 8,
            min_epochs: 1,
            batch_size: 32,
            label_smoothing: 0.1,
            optimizer: OptimizerConfig::default(),
            target_accuracy: 0.99,
            wer_band: [0.10, 0.35],
            eval_beam: 5,
            prefix_noise: 0.0,
            plateau_decay: 0.5,
        }
    }
}

/// Everything one `train --variant` run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantConfig {
    pub variant: Variant,
    pub dims: ModelDims,
    pub iteration: IterationConfig,
    /// β schedule; when absent, exponential decay reaching `final_beta` at
    /// the last iteration.
    pub schedule: Option<BetaSchedule>,
    pub final_beta: f64,
    pub optimizer: OptimizerConfig,
    /// Evaluation decoding.
    pub decode: DecodeConfig,
    /// Copy the ASR student's encoder into the fresh AST student.
    pub warm_start_encoder: bool,
    /// AggreVaTe: checkpoint to fine-tune. Model fields take a name under
    /// models/ or a path; relative paths start at the experiment directory.
    pub warm_start: Option<PathBuf>,
    /// Average the parameters of the last n iterations (0 = off).
    pub average_last: usize,
    /// Training corpus replacing corpus/train.tsv.
    pub corpus: Option<PathBuf>,
    pub expert: Option<PathBuf>,
    pub asr: Option<PathBuf>,
    pub seed: u64,
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Standard,
            dims: ModelDims {
                emb_dim: 64,
                hidden_dim: 128,
            },
            iteration: IterationConfig::default(),
            schedule: None,
            final_beta: 0.05,
            optimizer: OptimizerConfig::default(),
            decode: DecodeConfig::default(),
            warm_start_encoder: true,
            warm_start: None,
            average_last: 0,
            corpus: None,
            expert: None,
            asr: None,
            seed: 1,
        }
    }
}

impl VariantConfig {
    pub fn schedule(&self) -> BetaSchedule {
        self.schedule
            .unwrap_or_else(|| BetaSchedule::reaching(self.final_beta, self.iteration.iterations))
    }

    /// Iteration settings with the variant's oracle input and target mode.
    pub fn iteration_for_variant(&self) -> IterationConfig {
        let mut it = self.iteration;
        if let Some(input) = self.variant.oracle_input() {
            if self.variant != Variant::Aggrevate {
                it.oracle_input = input;
            }
        }
        if let Some(mode) = self.variant.dagger_target() {
            it.target_mode = mode;
        }
        it
    }

    pub fn validate(&self) -> Result<()> {
        self.iteration.validate()?;
        self.schedule().validate()?;
        self.optimizer.validate()?;
        self.decode.validate()?;
        if !(0.0..=1.0).contains(&self.final_beta) || self.final_beta == 0.0 {
            return Err(Error::Config(format!("final beta {} outside (0, 1]", self.final_beta)));
        }
        Ok(())
    }
}

/// A complete experiment: corpus, pretraining and one training variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub task: TaskConfig,
    pub expert: PretrainConfig,
    pub asr: PretrainConfig,
    pub train: VariantConfig,
    pub report: ReportConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub baseline: String,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            baseline: Variant::Standard.name().into(),
            trials: crate::metrics::DEFAULT_TRIALS,
            seed: 1,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            task: TaskConfig::default(),
            expert: PretrainConfig {
                dims: ModelDims {
                    emb_dim: 128,
                    hidden_dim: 256,
                },
                ..PretrainConfig::default()
            },
            asr: PretrainConfig::default(),
            train: VariantConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Desk-scale preset: students at 32/64, expert at twice that width.
    pub fn desk() -> Self {
        let student = ModelDims {
            emb_dim: 32,
            hidden_dim: 64,
        };
        let mut cfg = Self::default();
        cfg.expert.dims = ModelDims {
            emb_dim: 64,
            hidden_dim: 128,
        };
        cfg.asr.dims = student;
        cfg.train.dims = student;
        cfg
    }

    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: Self = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        for p in [&self.expert, &self.asr] {
            p.optimizer.validate()?;
            if p.batch_size == 0 || p.eval_beam == 0 {
                return Err(Error::Config("pretraining batch and beam sizes must be at least 1".into()));
            }
            if !(0.0..=1.0).contains(&p.prefix_noise) || !(0.0..1.0).contains(&p.label_smoothing) {
                return Err(Error::Config("prefix noise must lie in [0, 1] and label smoothing in [0, 1)".into()));
            }
            if !(p.plateau_decay > 0.0 && p.plateau_decay <= 1.0) {
                return Err(Error::Config("plateau decay must lie in (0, 1]".into()));
            }
        }
        if self.task.n_train == 0 {
            return Err(Error::Config("n_train must be at least 1".into()));
        }
        if self.report.trials < 1000 {
            return Err(Error::Config("randomization test needs at least 1000 trials".into()));
        }
        Ok(())
    }
}

/// Applies `dotted.key=value`; the value is parsed as TOML, falling back to
/// a bare string.
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override {assignment:?} is not key=value")))?;
    let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.trim().split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Usage(format!("override path {key:?} crosses a non-table value")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(Error::Usage("empty override key".into()))
}
