//! Canonical JSON form of plans.

use serde::Deserialize;
use thiserror::Error;

use super::{Plan, PlanStep, StructureError};
use crate::canonical;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("plan parse error at {location}: {message}")]
pub struct PlanParseError {
    pub location: String,
    pub message: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanWire {
    steps: Vec<PlanStep>,
    #[serde(rename = "final")]
    final_step: usize,
    goal_type: String,
}

/// Canonical text: sorted keys, no insignificant whitespace.
pub fn serialize_plan(plan: &Plan) -> String {
    canonical::to_string(plan)
}

pub fn deserialize_plan(text: &str) -> Result<Plan, PlanParseError> {
    let wire: PlanWire = serde_json::from_str(text).map_err(|e| PlanParseError {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    Plan::new(wire.steps, wire.final_step, wire.goal_type).map_err(|e| {
        let location = match &e {
            StructureError::TooShort(_) => "steps".to_string(),
            StructureError::Misnumbered { position, .. } => format!("steps[{}]", position - 1),
            StructureError::NonTopological { step, .. } => format!("steps[{}]", step - 1),
            StructureError::FinalNotLast { .. } => "final".to_string(),
            StructureError::DeadStep(step) => format!("steps[{}]", step - 1),
        };
        PlanParseError {
            location,
            message: e.to_string(),
        }
    })
}

impl<'de> Deserialize<'de> for Plan {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = PlanWire::deserialize(deserializer)?;
        Plan::new(wire.steps, wire.final_step, wire.goal_type).map_err(serde::de::Error::custom)
    }
}
