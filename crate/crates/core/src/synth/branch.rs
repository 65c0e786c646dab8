use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::exec::{execute_plan, Binding, ExecError, Execution};
use crate::graph::KnowledgeGraph;
use crate::plan::Plan;

pub const DEFAULT_BRANCH: &str = "default";

/// Gold answers of one question: branch label to answer entity ids. A
/// non-ambiguous question has the single branch `default`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchedAnswer {
    pub branches: BTreeMap<String, BTreeSet<String>>,
    pub ambiguous: bool,
}

impl BranchedAnswer {
    pub fn total_size(&self) -> usize {
        self.branches.values().map(BTreeSet::len).sum()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }
}

/// One branch's execution, kept for statistics.
#[derive(Debug, Clone)]
pub struct BranchTrace {
    pub label: String,
    /// The entity bound to the ambiguous slot, if any.
    pub entity: Option<String>,
    pub execution: Execution,
}

#[derive(Debug, Clone)]
pub struct BranchedExecution {
    pub answer: BranchedAnswer,
    /// Non-empty branches, in label order.
    pub traces: Vec<BranchTrace>,
}

pub fn execute_branched(plan: &Plan, graph: &KnowledgeGraph) -> Result<BranchedAnswer, ExecError> {
    execute_branched_traced(plan, graph).map(|b| b.answer)
}

/// Run `plan` once per reading of its ambiguous seed (or once if it has
/// none). Branches are labelled with the entity's label, suffixed with its
/// id when two readings share a label; empty branches are dropped.
pub fn execute_branched_traced(plan: &Plan, graph: &KnowledgeGraph) -> Result<BranchedExecution, ExecError> {
    let mut runs: Vec<(String, Option<String>, Execution)> = Vec::new();
    let ambiguous = match plan.ambiguous_ref() {
        None => {
            let execution = execute_plan(plan, graph, &Binding::new())?;
            runs.push((DEFAULT_BRANCH.to_string(), None, execution));
            false
        }
        Some((step, surface, slot_type)) => {
            let candidates = graph
                .ambiguous_candidates(surface, slot_type)
                .map_err(|_| ExecError::UnknownSurface(surface.to_string()))?;
            let mut label_count: BTreeMap<&str, usize> = BTreeMap::new();
            for &ix in &candidates {
                *label_count.entry(graph.entity(ix).label.as_str()).or_default() += 1;
            }
            for ix in candidates {
                let entity = graph.entity(ix);
                let binding = Binding::from([(step, entity.id.clone())]);
                let execution = execute_plan(plan, graph, &binding)?;
                let label = if label_count[entity.label.as_str()] > 1 {
                    format!("{} [{}]", entity.label, entity.id)
                } else {
                    entity.label.clone()
                };
                runs.push((label, Some(entity.id.clone()), execution));
            }
            true
        }
    };

    runs.retain(|(_, _, e)| !e.final_set().is_empty());
    if runs.is_empty() {
        return Err(ExecError::AllBranchesEmpty);
    }
    runs.sort_by(|a, b| a.0.cmp(&b.0));
    let branches = runs
        .iter()
        .map(|(label, _, e)| {
            let ids = e.final_set().iter().map(|&ix| graph.entity(ix).id.clone()).collect();
            (label.clone(), ids)
        })
        .collect();
    let traces = runs
        .into_iter()
        .map(|(label, entity, execution)| BranchTrace {
            label,
            entity,
            execution,
        })
        .collect();
    Ok(BranchedExecution {
        answer: BranchedAnswer { branches, ambiguous },
        traces,
    })
}
