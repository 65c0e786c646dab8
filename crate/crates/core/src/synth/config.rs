use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{HeuristicConfig, OpKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("min_steps must be at least 2, got {0}")]
    MinSteps(usize),
    #[error("max_steps ({max}) must be at least min_steps ({min})")]
    MaxSteps { min: usize, max: usize },
    #[error("op weight for `{0}` must be finite and non-negative")]
    BadWeight(OpKind),
    #[error("op weights are all zero")]
    ZeroWeights,
    #[error("ambiguous_fraction must lie in [0, 1], got {0}")]
    Fraction(String),
    #[error("`{0}` must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub seed: u64,
    pub min_steps: usize,
    pub max_steps: usize,
    /// Relative weight of each operation kind when growing a plan. Missing
    /// kinds weigh 0. `atomic` only matters as the start of a set-operation
    /// branch and is ignored otherwise.
    pub op_weights: BTreeMap<OpKind, f64>,
    pub candidate_pool: usize,
    pub max_attempts_per_plan: usize,
    pub ambiguous_fraction: f64,
    pub max_answer_size: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        let op_weights = [
            (OpKind::Join, 3.0),
            (OpKind::Filter, 2.0),
            (OpKind::Union, 1.0),
            (OpKind::Intersection, 1.0),
            (OpKind::Difference, 1.0),
            (OpKind::GroupBy, 1.0),
        ]
        .into_iter()
        .collect();
        SynthesisConfig {
            seed: 0,
            min_steps: 2,
            max_steps: 8,
            op_weights,
            candidate_pool: 50,
            max_attempts_per_plan: 64,
            ambiguous_fraction: 0.5,
            max_answer_size: 64,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_steps < 2 {
            return Err(ConfigError::MinSteps(self.min_steps));
        }
        if self.max_steps < self.min_steps {
            return Err(ConfigError::MaxSteps {
                min: self.min_steps,
                max: self.max_steps,
            });
        }
        for (&kind, &w) in &self.op_weights {
            if !w.is_finite() || w < 0.0 {
                return Err(ConfigError::BadWeight(kind));
            }
        }
        if self.op_weights.values().all(|&w| w == 0.0) {
            return Err(ConfigError::ZeroWeights);
        }
        if !(0.0..=1.0).contains(&self.ambiguous_fraction) {
            return Err(ConfigError::Fraction(self.ambiguous_fraction.to_string()));
        }
        if self.candidate_pool == 0 {
            return Err(ConfigError::NonPositive("candidate_pool"));
        }
        if self.max_attempts_per_plan == 0 {
            return Err(ConfigError::NonPositive("max_attempts_per_plan"));
        }
        if self.max_answer_size == 0 {
            return Err(ConfigError::NonPositive("max_answer_size"));
        }
        Ok(())
    }

    pub fn heuristics(&self) -> HeuristicConfig {
        HeuristicConfig {
            min_steps: self.min_steps,
            max_steps: self.max_steps,
        }
    }

    pub fn weight(&self, kind: OpKind) -> f64 {
        self.op_weights.get(&kind).copied().unwrap_or(0.0)
    }
}
