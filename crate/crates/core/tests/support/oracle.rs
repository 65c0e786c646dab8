//! Reference interpreter written straight from the operation definitions.
//!
//! It works on the raw fact lists with string ids: no adjacency indexes,
//! no entity handles, no shared intermediate state. Every step is
//! recomputed from scratch by scanning the triple list.

use std::collections::{BTreeMap, BTreeSet};

use branchqa_core::graph::{AttributeFact, Direction, Literal, Triple};
use branchqa_core::plan::{Comparator, Op, Plan, Predicate, Slot};

pub struct RawGraph<'a> {
    pub triples: &'a [Triple],
    pub attributes: &'a [AttributeFact],
}

type Set = BTreeSet<String>;

impl RawGraph<'_> {
    fn step_entities(&self, e: &str, relation: &str, direction: Direction) -> Set {
        self.triples
            .iter()
            .filter(|t| t.relation == relation)
            .filter_map(|t| match direction {
                Direction::Forward if t.subject == e => Some(t.object.clone()),
                Direction::Reverse if t.object == e => Some(t.subject.clone()),
                _ => None,
            })
            .collect()
    }

    fn compare(&self, e: &str, attribute: &str, cmp: Comparator, value: &Literal) -> bool {
        self.attributes
            .iter()
            .filter(|f| f.subject == e && f.attribute == attribute)
            .any(|f| match (&f.value, value) {
                (Literal::Int(a), Literal::Int(b)) => match cmp {
                    Comparator::Lt => a < b,
                    Comparator::Le => a <= b,
                    Comparator::Eq => a == b,
                    Comparator::Ge => a >= b,
                    Comparator::Gt => a > b,
                },
                (Literal::Str(a), Literal::Str(b)) => match cmp {
                    Comparator::Lt => a < b,
                    Comparator::Le => a <= b,
                    Comparator::Eq => a == b,
                    Comparator::Ge => a >= b,
                    Comparator::Gt => a > b,
                },
                _ => false,
            })
    }
}

fn slot_id(slot: &Slot, step: usize, binding: &BTreeMap<usize, String>) -> String {
    match slot {
        Slot::Entity { entity } => entity.clone(),
        _ => binding.get(&step).cloned().expect("oracle: slot bound"),
    }
}

/// How many members of `step`'s input reached each entity. Only defined
/// for traversals and for group-by, which inherits its input's counts.
fn multiplicity(
    plan: &Plan,
    g: &RawGraph<'_>,
    binding: &BTreeMap<usize, String>,
    step: usize,
) -> BTreeMap<String, usize> {
    match &plan.step(step).op {
        Op::Atomic { .. } => run_step(plan, g, binding, step).into_iter().map(|e| (e, 1)).collect(),
        Op::Join {
            input,
            relation,
            direction,
        } => {
            let sources = run_step(plan, g, binding, *input);
            let mut counts = BTreeMap::new();
            for target in run_step(plan, g, binding, step) {
                let n = sources
                    .iter()
                    .filter(|s| g.step_entities(s, relation, *direction).contains(&target))
                    .count();
                counts.insert(target, n);
            }
            counts
        }
        Op::GroupBy { input } => multiplicity(plan, g, binding, *input),
        other => panic!("oracle: no multiplicity for {other:?}"),
    }
}

/// The set produced by `step`, recomputed from its definition.
pub fn run_step(plan: &Plan, g: &RawGraph<'_>, binding: &BTreeMap<usize, String>, step: usize) -> Set {
    match &plan.step(step).op {
        Op::Atomic {
            seed,
            relation,
            direction,
        } => g.step_entities(&slot_id(seed, step, binding), relation, *direction),
        Op::Join {
            input,
            relation,
            direction,
        } => {
            let mut out = Set::new();
            for e in run_step(plan, g, binding, *input) {
                out.extend(g.step_entities(&e, relation, *direction));
            }
            out
        }
        Op::Filter { input, predicate } => {
            let members = run_step(plan, g, binding, *input);
            match predicate {
                Predicate::HasRelation {
                    relation,
                    direction,
                    target,
                } => members
                    .into_iter()
                    .filter(|e| {
                        let n = g.step_entities(e, relation, *direction);
                        match target {
                            None => !n.is_empty(),
                            Some(t) => n.contains(&slot_id(t, step, binding)),
                        }
                    })
                    .collect(),
                Predicate::CountAtLeast { k } => {
                    let counts = multiplicity(plan, g, binding, *input);
                    members
                        .into_iter()
                        .filter(|e| counts.get(e).copied().unwrap_or(0) >= *k as usize)
                        .collect()
                }
                Predicate::AttributeCompare {
                    attribute,
                    comparator,
                    value,
                } => {
                    let value = value.as_ref().expect("oracle: literal bound");
                    members
                        .into_iter()
                        .filter(|e| g.compare(e, attribute, *comparator, value))
                        .collect()
                }
            }
        }
        Op::Union { left, right } => {
            let mut out = run_step(plan, g, binding, *left);
            out.extend(run_step(plan, g, binding, *right));
            out
        }
        Op::Intersection { left, right } => {
            let r = run_step(plan, g, binding, *right);
            run_step(plan, g, binding, *left)
                .into_iter()
                .filter(|e| r.contains(e))
                .collect()
        }
        Op::Difference { left, right } => {
            let r = run_step(plan, g, binding, *right);
            run_step(plan, g, binding, *left)
                .into_iter()
                .filter(|e| !r.contains(e))
                .collect()
        }
        Op::GroupBy { input } => run_step(plan, g, binding, *input),
    }
}

/// Final answer of `plan` under `binding`.
pub fn run(plan: &Plan, g: &RawGraph<'_>, binding: &BTreeMap<usize, String>) -> Set {
    run_step(plan, g, binding, plan.final_step())
}
