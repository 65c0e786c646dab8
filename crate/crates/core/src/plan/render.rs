//! Human-readable renderings of plans.

use thiserror::Error;

use super::{typecheck, Op, Plan, Predicate, Slot, TypeError};
use crate::graph::{Direction, KnowledgeGraph, RelationDef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("plan does not typecheck: {0:?}")]
    IllTyped(Vec<TypeError>),
}

struct Labels<'g> {
    graph: &'g KnowledgeGraph,
}

impl<'g> Labels<'g> {
    fn type_label(&self, id: &str) -> Result<&'g str, RenderError> {
        self.graph
            .schema()
            .entity_type(id)
            .map(|t| t.label.as_str())
            .ok_or_else(|| RenderError::UnknownId(id.to_string()))
    }

    fn relation(&self, id: &str) -> Result<&'g RelationDef, RenderError> {
        self.graph
            .schema()
            .relation(id)
            .ok_or_else(|| RenderError::UnknownId(id.to_string()))
    }

    fn attribute_label(&self, id: &str) -> Result<&'g str, RenderError> {
        self.graph
            .schema()
            .attribute(id)
            .map(|a| a.label.as_str())
            .ok_or_else(|| RenderError::UnknownId(id.to_string()))
    }

    fn slot(&self, slot: &Slot) -> Result<String, RenderError> {
        match slot {
            Slot::Entity { entity } => self
                .graph
                .entity_by_id(entity)
                .map(|e| e.label.clone())
                .map_err(|_| RenderError::UnknownId(entity.clone())),
            Slot::Ambiguous { surface, .. } => {
                self.graph
                    .ambiguous(surface)
                    .map_err(|_| RenderError::UnknownId(surface.clone()))?;
                Ok(surface.clone())
            }
            Slot::Hole { slot_type, .. } => Ok(format!("{{SUBJECT_{}}}", placeholder_key(slot_type))),
        }
    }

    /// " via <relation>" unless the relation is the only one linking its
    /// two types, in which case the type pair already identifies it.
    fn via(&self, rel: &RelationDef) -> String {
        let parallel = self
            .graph
            .schema()
            .relations
            .iter()
            .filter(|r| r.source_type == rel.source_type && r.target_type == rel.target_type)
            .count();
        if parallel > 1 {
            format!(" via {}", rel.label)
        } else {
            String::new()
        }
    }
}

pub(crate) fn placeholder_key(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect()
}

fn literal(value: &Option<crate::graph::Literal>, attribute: &str) -> String {
    match value {
        Some(v) => v.to_string(),
        None => format!("{{VALUE_{}}}", placeholder_key(attribute)),
    }
}

/// One numbered English sentence per step: `(1) ...`, `(2) ...`.
pub fn render_steps(plan: &Plan, graph: &KnowledgeGraph) -> Result<Vec<String>, RenderError> {
    let types = typecheck(plan, graph.schema()).map_err(RenderError::IllTyped)?;
    let labels = Labels { graph };
    let mut out = Vec::with_capacity(plan.len());
    for step in plan.steps() {
        let text = match &step.op {
            Op::Atomic {
                seed,
                relation,
                direction,
            } => {
                let rel = labels.relation(relation)?;
                let far = labels.type_label(rel.far_type(*direction))?;
                let seed = labels.slot(seed)?;
                match direction {
                    Direction::Forward => format!("Find {far} of {seed} via {}.", rel.label),
                    Direction::Reverse => format!("Find {far} by {seed}{}.", labels.via(rel)),
                }
            }
            Op::Join {
                input,
                relation,
                direction,
            } => {
                let rel = labels.relation(relation)?;
                let far = labels.type_label(rel.far_type(*direction))?;
                match direction {
                    Direction::Forward => {
                        format!("Find {far} of step {input} result via {}.", rel.label)
                    }
                    Direction::Reverse => {
                        format!("Find {far} by step {input} result{}.", labels.via(rel))
                    }
                }
            }
            Op::Filter { input, predicate } => match predicate {
                Predicate::HasRelation {
                    relation,
                    direction,
                    target,
                } => {
                    let rel = labels.relation(relation)?;
                    let far = labels.type_label(rel.far_type(*direction))?;
                    match (direction, target) {
                        (Direction::Forward, Some(t)) => {
                            format!("Keep step {input} result with {} {}.", rel.label, labels.slot(t)?)
                        }
                        (Direction::Forward, None) => {
                            format!("Keep step {input} result with any {}.", rel.label)
                        }
                        (Direction::Reverse, Some(t)) => format!(
                            "Keep step {input} result that is {} of {}.",
                            rel.label,
                            labels.slot(t)?
                        ),
                        (Direction::Reverse, None) => format!(
                            "Keep step {input} result that is {} of any {far}.",
                            rel.label
                        ),
                    }
                }
                Predicate::CountAtLeast { k } => format!("Filter by count ≥ {k}."),
                Predicate::AttributeCompare {
                    attribute,
                    comparator,
                    value,
                } => format!(
                    "Keep step {input} result with {} {} {}.",
                    labels.attribute_label(attribute)?,
                    comparator.symbol(),
                    literal(value, attribute)
                ),
            },
            Op::Union { left, right } => format!("Union of step {left} and step {right}."),
            Op::Intersection { left, right } => {
                format!("Intersection of step {left} and step {right}.")
            }
            Op::Difference { left, right } => {
                format!("Step {left} result excluding step {right} result.")
            }
            Op::GroupBy { .. } => {
                format!("Group by {}.", labels.type_label(&types[step.index - 1])?)
            }
        };
        out.push(format!("({}) {text}", step.index));
    }
    Ok(out)
}

/// Compact unnumbered clauses, one per step, for template questions.
pub fn render_clauses(plan: &Plan, graph: &KnowledgeGraph) -> Result<Vec<String>, RenderError> {
    typecheck(plan, graph.schema()).map_err(RenderError::IllTyped)?;
    let labels = Labels { graph };
    let mut out = Vec::with_capacity(plan.len());
    for step in plan.steps() {
        let clause = match &step.op {
            Op::Atomic {
                seed,
                relation,
                direction,
            } => {
                let rel = labels.relation(relation)?;
                let seed = labels.slot(seed)?;
                match direction {
                    Direction::Forward => format!("{} of {seed}", rel.label),
                    Direction::Reverse => format!(
                        "{} with {} {seed}",
                        labels.type_label(rel.far_type(*direction))?,
                        rel.label
                    ),
                }
            }
            Op::Join {
                input,
                relation,
                direction,
            } => {
                let rel = labels.relation(relation)?;
                match direction {
                    Direction::Forward => format!("{} of step {input}", rel.label),
                    Direction::Reverse => format!(
                        "{} with {} in step {input}",
                        labels.type_label(rel.far_type(*direction))?,
                        rel.label
                    ),
                }
            }
            Op::Filter { predicate, .. } => match predicate {
                Predicate::HasRelation {
                    relation,
                    direction,
                    target,
                } => {
                    let rel = labels.relation(relation)?;
                    match (direction, target) {
                        (Direction::Forward, Some(t)) => format!("has {} {}", rel.label, labels.slot(t)?),
                        (Direction::Forward, None) => format!("has some {}", rel.label),
                        (Direction::Reverse, Some(t)) => format!("is {} of {}", rel.label, labels.slot(t)?),
                        (Direction::Reverse, None) => format!(
                            "is {} of some {}",
                            rel.label,
                            labels.type_label(rel.far_type(*direction))?
                        ),
                    }
                }
                Predicate::CountAtLeast { k } => format!("appears at least {k} times"),
                Predicate::AttributeCompare {
                    attribute,
                    comparator,
                    value,
                } => format!(
                    "{} {} {}",
                    labels.attribute_label(attribute)?,
                    comparator.symbol(),
                    literal(value, attribute)
                ),
            },
            Op::Union { left, right } => format!("in step {left} or step {right}"),
            Op::Intersection { left, right } => format!("in both step {left} and step {right}"),
            Op::Difference { left, right } => format!("in step {left} but not step {right}"),
            Op::GroupBy { input } => format!("counted over step {input}"),
        };
        out.push(clause);
    }
    Ok(out)
}

/// Naive English plural of a type label.
pub fn plural(label: &str) -> String {
    let lower = label.to_lowercase();
    if lower.ends_with('s') || lower.ends_with('x') || lower.ends_with("ch") || lower.ends_with("sh") {
        format!("{label}es")
    } else if lower.ends_with('y')
        && !matches!(lower.chars().rev().nth(1), Some('a' | 'e' | 'i' | 'o' | 'u'))
    {
        format!("{}ies", &label[..label.len() - 1])
    } else {
        format!("{label}s")
    }
}
