use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Probability of keeping the reference during roll-in at iteration `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSchedule {
    /// β(i) = exp(−decay·(i − 1)).
    Exponential { decay: f64 },
    Constant { value: f64 },
}

impl BetaSchedule {
    /// Exponential decay reaching `final_beta` at iteration `iterations`.
    pub fn reaching(final_beta: f64, iterations: usize) -> Self {
        let steps = iterations.saturating_sub(1).max(1) as f64;
        BetaSchedule::Exponential {
            decay: -final_beta.ln() / steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaSchedule::Exponential { decay } if !(decay > 0.0 && decay.is_finite()) => {
                Err(Error::Config(format!("decay rate {decay} must be positive")))
            }
            BetaSchedule::Constant { value } if !(0.0..=1.0).contains(&value) => {
                Err(Error::Config(format!("constant beta {value} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

/// β for the 1-based iteration `i`.
pub fn beta_at(schedule: &BetaSchedule, i: usize) -> f64 {
    assert!(i >= 1, "iterations are 1-based");
    match *schedule {
        BetaSchedule::Exponential { decay } => (-decay * (i - 1) as f64).exp().clamp(0.0, 1.0),
        BetaSchedule::Constant { value } => value,
    }
}
