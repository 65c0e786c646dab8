//! Static type inference over plans.

use std::fmt;

use super::{Op, Plan, Predicate, Slot};
use crate::graph::{KnowledgeGraph, Schema};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    pub step: usize,
    pub reason: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step, self.reason)
    }
}

impl std::error::Error for TypeError {}

/// Infer every step's output type. On success returns the types indexed by
/// position (step `i` at `[i - 1]`); otherwise every error found. Errors do
/// not cascade: a step whose input failed to type is skipped.
pub fn typecheck(plan: &Plan, schema: &Schema) -> Result<Vec<String>, Vec<TypeError>> {
    let mut types: Vec<Option<String>> = Vec::with_capacity(plan.len());
    let mut errors = Vec::new();
    let ty = |types: &Vec<Option<String>>, i: usize| types.get(i - 1).cloned().flatten();

    for step in plan.steps() {
        let idx = step.index;
        let mut err = |reason: String| errors.push(TypeError { step: idx, reason });
        let out: Option<String> = match &step.op {
            Op::Atomic {
                seed,
                relation,
                direction,
            } => match schema.relation(relation) {
                None => {
                    err(format!("unknown relation `{relation}`"));
                    None
                }
                Some(rel) => {
                    if let Some(t) = seed.declared_type() {
                        if t != rel.near_type(*direction) {
                            err(format!(
                                "seed slot has type `{t}` but `{relation}` starts from `{}`",
                                rel.near_type(*direction)
                            ));
                        }
                    }
                    Some(rel.far_type(*direction).to_string())
                }
            },
            Op::Join {
                input,
                relation,
                direction,
            } => match schema.relation(relation) {
                None => {
                    err(format!("unknown relation `{relation}`"));
                    None
                }
                Some(rel) => {
                    if let Some(in_ty) = ty(&types, *input) {
                        if in_ty != rel.near_type(*direction) {
                            err(format!(
                                "join over `{relation}` needs `{}` input, step {input} is `{in_ty}`",
                                rel.near_type(*direction)
                            ));
                        }
                    }
                    Some(rel.far_type(*direction).to_string())
                }
            },
            Op::Filter { input, predicate } => {
                let in_ty = ty(&types, *input);
                match predicate {
                    Predicate::HasRelation {
                        relation,
                        direction,
                        target,
                    } => match schema.relation(relation) {
                        None => err(format!("unknown relation `{relation}`")),
                        Some(rel) => {
                            if let Some(in_ty) = &in_ty {
                                if in_ty != rel.near_type(*direction) {
                                    err(format!(
                                        "predicate over `{relation}` needs `{}` members, step {input} is `{in_ty}`",
                                        rel.near_type(*direction)
                                    ));
                                }
                            }
                            match target {
                                Some(Slot::Ambiguous { .. }) => {
                                    err("ambiguous references are only allowed as atomic seeds".into())
                                }
                                Some(Slot::Hole { ambiguous: true, .. }) => {
                                    err("ambiguous references are only allowed as atomic seeds".into())
                                }
                                Some(Slot::Hole { slot_type, .. }) if slot_type != rel.far_type(*direction) => {
                                    err(format!(
                                        "target slot has type `{slot_type}`, `{relation}` leads to `{}`",
                                        rel.far_type(*direction)
                                    ))
                                }
                                _ => {}
                            }
                        }
                    },
                    Predicate::CountAtLeast { k } => {
                        if *k == 0 {
                            err("count threshold must be positive".into());
                        }
                        if !matches!(plan.step(*input).op, Op::GroupBy { .. }) {
                            err(format!("count filter must read a group-by step, step {input} is not one"));
                        }
                    }
                    Predicate::AttributeCompare {
                        attribute, value, ..
                    } => match schema.attribute(attribute) {
                        None => err(format!("unknown attribute `{attribute}`")),
                        Some(def) => {
                            if let Some(in_ty) = &in_ty {
                                if in_ty != &def.subject_type {
                                    err(format!(
                                        "attribute `{attribute}` applies to `{}`, step {input} is `{in_ty}`",
                                        def.subject_type
                                    ));
                                }
                            }
                            if let Some(v) = value {
                                if !def.value_kind.accepts(v) {
                                    err(format!(
                                        "attribute `{attribute}` expects a {} literal, got `{v}`",
                                        def.value_kind
                                    ));
                                }
                            }
                        }
                    },
                }
                in_ty
            }
            Op::Union { left, right }
            | Op::Difference { left, right }
            | Op::Intersection { left, right } => {
                match (ty(&types, *left), ty(&types, *right)) {
                    (Some(l), Some(r)) if l != r => {
                        err(format!(
                            "incompatible operand types: step {left} is `{l}`, step {right} is `{r}`"
                        ));
                        None
                    }
                    (Some(l), Some(_)) => Some(l),
                    _ => None,
                }
            }
            Op::GroupBy { input } => {
                if !matches!(plan.step(*input).op, Op::Atomic { .. } | Op::Join { .. }) {
                    err(format!("group-by must read a traversal step, step {input} is not one"));
                }
                ty(&types, *input)
            }
        };
        types.push(out);
    }

    let last = plan.final_step();
    if let Some(Some(final_ty)) = types.get(last - 1) {
        if final_ty != plan.goal_type() {
            errors.push(TypeError {
                step: last,
                reason: format!(
                    "goal type is `{}` but the final step yields `{final_ty}`",
                    plan.goal_type()
                ),
            });
        }
    }

    if errors.is_empty() {
        Ok(types.into_iter().map(|t| t.expect("typed step")).collect())
    } else {
        Err(errors)
    }
}

/// Check bound entity slots against a concrete graph: ids resolve, seeds
/// have the relation's near type and targets its far type, ambiguous
/// surfaces exist.
pub fn check_bindings(plan: &Plan, graph: &KnowledgeGraph) -> Result<(), Vec<TypeError>> {
    let schema = graph.schema();
    let mut errors = Vec::new();
    for step in plan.steps() {
        let (slot, expected) = match &step.op {
            Op::Atomic {
                seed,
                relation,
                direction,
            } => match schema.relation(relation) {
                Some(rel) => (seed, rel.near_type(*direction)),
                None => continue,
            },
            Op::Filter {
                predicate:
                    Predicate::HasRelation {
                        relation,
                        direction,
                        target: Some(t),
                    },
                ..
            } => match schema.relation(relation) {
                Some(rel) => (t, rel.far_type(*direction)),
                None => continue,
            },
            _ => continue,
        };
        let mut err = |reason: String| errors.push(TypeError {
            step: step.index,
            reason,
        });
        match slot {
            Slot::Entity { entity } => match graph.entity_by_id(entity) {
                Err(_) => err(format!("unknown entity `{entity}`")),
                Ok(e) if e.entity_type != expected => err(format!(
                    "entity `{entity}` is `{}`, slot needs `{expected}`",
                    e.entity_type
                )),
                Ok(_) => {}
            },
            Slot::Ambiguous { surface, .. } => {
                if graph.ambiguous(surface).is_err() {
                    err(format!("unknown ambiguous surface `{surface}`"));
                }
            }
            Slot::Hole { .. } => {}
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}
