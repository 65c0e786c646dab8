use thiserror::Error;

use crate::graph::Entity;

/// What a selector sees when asked to fill one hole.
#[derive(Debug, Clone)]
pub struct SelectionRequest<'a> {
    /// Placeholder name as it appears in `rendered_plan`, e.g. `SUBJECT_FILM`.
    pub placeholder: String,
    pub slot_type: &'a str,
    pub candidates: &'a [&'a Entity],
    /// The skeleton rendered with placeholders for its holes.
    pub rendered_plan: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectorError {
    #[error("selector client failed: {0}")]
    Client(String),
    #[error("malformed selector response: {0}")]
    Malformed(String),
    #[error("selector returned ids outside the candidate pool: {0:?}")]
    Rejected(Vec<String>),
}

/// Ranks candidates for a hole. Returned ids are tried first, in order;
/// ids outside the candidate pool are discarded by the caller.
pub trait EntitySelector: Send + Sync {
    fn name(&self) -> &str;
    fn select(&self, request: &SelectionRequest<'_>) -> Result<Vec<String>, SelectorError>;
}

/// Selector with no preference: realization falls straight through to
/// trying candidates in random order and keeping the first that executes
/// to a non-empty answer.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleGreedy;

impl EntitySelector for OracleGreedy {
    fn name(&self) -> &str {
        "oracle-greedy"
    }

    fn select(&self, _request: &SelectionRequest<'_>) -> Result<Vec<String>, SelectorError> {
        Ok(Vec::new())
    }
}

/// Keep the ids that are in the pool, in the selector's order and without
/// repeats, and report the rest.
pub fn retain_in_pool(selected: Vec<String>, pool: &[&Entity]) -> (Vec<String>, Vec<String>) {
    let mut kept: Vec<String> = Vec::new();
    let mut dropped = Vec::new();
    for id in selected {
        if pool.iter().any(|e| e.id == id) {
            if !kept.contains(&id) {
                kept.push(id);
            }
        } else {
            dropped.push(id);
        }
    }
    (kept, dropped)
}
