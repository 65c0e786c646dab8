//! The seven-operation plan algebra.
//!
//! A [`Plan`] is a list of steps in topological order: each step reads only
//! earlier steps, and the last step produces the answer. Steps are
//! `Atomic` and `Join` traversals, `Filter`, the three set operations, and
//! `GroupBy`, which attaches multiplicities consumed by a count filter.
//!
//! Entity slots may be bound ([`Slot::Entity`]), point at an ambiguous
//! surface form ([`Slot::Ambiguous`]) or be open typed holes
//! ([`Slot::Hole`]) in sampled skeletons.

mod codec;
mod heuristics;
mod render;
mod typecheck;

pub use codec::{deserialize_plan, serialize_plan, PlanParseError};
pub use heuristics::{validate_heuristics, HeuristicConfig, Rule, RuleViolation};
pub use render::{plural, render_clauses, render_steps, RenderError};
pub(crate) use render::placeholder_key;
pub use typecheck::{check_bindings, typecheck, TypeError};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Direction, Literal};

/// An entity position in a plan: an Atomic seed or a HasRelation target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Slot {
    Entity {
        entity: String,
    },
    Ambiguous {
        #[serde(rename = "ambiguous")]
        surface: String,
        slot_type: String,
    },
    Hole {
        #[serde(rename = "hole")]
        slot_type: String,
        #[serde(default)]
        ambiguous: bool,
    },
}

impl Slot {
    pub fn entity(id: impl Into<String>) -> Self {
        Slot::Entity { entity: id.into() }
    }

    pub fn hole(slot_type: impl Into<String>) -> Self {
        Slot::Hole {
            slot_type: slot_type.into(),
            ambiguous: false,
        }
    }

    pub fn ambiguous(surface: impl Into<String>, slot_type: impl Into<String>) -> Self {
        Slot::Ambiguous {
            surface: surface.into(),
            slot_type: slot_type.into(),
        }
    }

    pub fn is_hole(&self) -> bool {
        matches!(self, Slot::Hole { .. })
    }

    /// True for a bound ambiguous reference or a hole reserved for one.
    pub fn is_ambiguous(&self) -> bool {
        matches!(
            self,
            Slot::Ambiguous { .. } | Slot::Hole { ambiguous: true, .. }
        )
    }

    /// The declared type, when the slot carries one.
    pub fn declared_type(&self) -> Option<&str> {
        match self {
            Slot::Entity { .. } => None,
            Slot::Ambiguous { slot_type, .. } | Slot::Hole { slot_type, .. } => Some(slot_type),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Comparator {
    pub const ALL: [Comparator; 5] = [
        Comparator::Lt,
        Comparator::Le,
        Comparator::Eq,
        Comparator::Ge,
        Comparator::Gt,
    ];

    pub fn holds(self, lhs: &Literal, rhs: &Literal) -> bool {
        use std::cmp::Ordering::*;
        let ord = match (lhs, rhs) {
            (Literal::Int(a), Literal::Int(b)) => a.cmp(b),
            (Literal::Str(a), Literal::Str(b)) => a.cmp(b),
            _ => return false,
        };
        match self {
            Comparator::Lt => ord == Less,
            Comparator::Le => ord != Greater,
            Comparator::Eq => ord == Equal,
            Comparator::Ge => ord != Less,
            Comparator::Gt => ord == Greater,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "≤",
            Comparator::Eq => "=",
            Comparator::Ge => "≥",
            Comparator::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Predicate {
    /// Member has at least one neighbor over `relation`, or has `target`
    /// among its neighbors when a target is given.
    HasRelation {
        relation: String,
        #[serde(rename = "dir")]
        direction: Direction,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<Slot>,
    },
    /// Group multiplicity is at least `k`. Only valid on a `GroupBy` step.
    CountAtLeast { k: u32 },
    /// Some recorded value of `attribute` satisfies `comparator value`.
    /// A `None` value is an open literal hole.
    AttributeCompare {
        attribute: String,
        #[serde(rename = "cmp")]
        comparator: Comparator,
        value: Option<Literal>,
    },
}

impl Predicate {
    pub fn kind(&self) -> &'static str {
        match self {
            Predicate::HasRelation { .. } => "has_relation",
            Predicate::CountAtLeast { .. } => "count_at_least",
            Predicate::AttributeCompare { .. } => "attribute_compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Atomic {
        seed: Slot,
        relation: String,
        #[serde(rename = "dir")]
        direction: Direction,
    },
    Join {
        #[serde(rename = "in")]
        input: usize,
        relation: String,
        #[serde(rename = "dir")]
        direction: Direction,
    },
    Filter {
        #[serde(rename = "in")]
        input: usize,
        #[serde(rename = "pred")]
        predicate: Predicate,
    },
    Union {
        #[serde(rename = "l")]
        left: usize,
        #[serde(rename = "r")]
        right: usize,
    },
    Difference {
        #[serde(rename = "l")]
        left: usize,
        #[serde(rename = "r")]
        right: usize,
    },
    Intersection {
        #[serde(rename = "l")]
        left: usize,
        #[serde(rename = "r")]
        right: usize,
    },
    GroupBy {
        #[serde(rename = "in")]
        input: usize,
    },
}

/// Operation kinds, used for sampling weights and histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Atomic,
    Join,
    Filter,
    Union,
    Difference,
    Intersection,
    GroupBy,
}

impl OpKind {
    pub const ALL: [OpKind; 7] = [
        OpKind::Atomic,
        OpKind::Join,
        OpKind::Filter,
        OpKind::Union,
        OpKind::Difference,
        OpKind::Intersection,
        OpKind::GroupBy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Atomic => "atomic",
            OpKind::Join => "join",
            OpKind::Filter => "filter",
            OpKind::Union => "union",
            OpKind::Difference => "difference",
            OpKind::Intersection => "intersection",
            OpKind::GroupBy => "group_by",
        }
    }

    pub fn is_set_op(self) -> bool {
        matches!(self, OpKind::Union | OpKind::Difference | OpKind::Intersection)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Op {
    pub fn kind(&self) -> OpKind {
        match self {
            Op::Atomic { .. } => OpKind::Atomic,
            Op::Join { .. } => OpKind::Join,
            Op::Filter { .. } => OpKind::Filter,
            Op::Union { .. } => OpKind::Union,
            Op::Difference { .. } => OpKind::Difference,
            Op::Intersection { .. } => OpKind::Intersection,
            Op::GroupBy { .. } => OpKind::GroupBy,
        }
    }

    /// Steps this operation reads, in operand order.
    pub fn inputs(&self) -> Vec<usize> {
        match *self {
            Op::Atomic { .. } => vec![],
            Op::Join { input, .. } | Op::Filter { input, .. } | Op::GroupBy { input } => vec![input],
            Op::Union { left, right }
            | Op::Difference { left, right }
            | Op::Intersection { left, right } => vec![left, right],
        }
    }

    /// Operands of a set operation.
    pub fn set_operands(&self) -> Option<(usize, usize)> {
        match *self {
            Op::Union { left, right }
            | Op::Difference { left, right }
            | Op::Intersection { left, right } => Some((left, right)),
            _ => None,
        }
    }

    /// The entity slot carried by this step, if any.
    pub fn slot(&self) -> Option<&Slot> {
        match self {
            Op::Atomic { seed, .. } => Some(seed),
            Op::Filter {
                predicate: Predicate::HasRelation {
                    target: Some(t), ..
                },
                ..
            } => Some(t),
            _ => None,
        }
    }

    pub(crate) fn slot_mut(&mut self) -> Option<&mut Slot> {
        match self {
            Op::Atomic { seed, .. } => Some(seed),
            Op::Filter {
                predicate: Predicate::HasRelation {
                    target: Some(t), ..
                },
                ..
            } => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    /// 1-based position.
    #[serde(rename = "i")]
    pub index: usize,
    #[serde(flatten)]
    pub op: Op,
}

/// A validated plan. Construction checks structure only; types are checked
/// by [`typecheck`] and style rules by [`validate_heuristics`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Plan {
    steps: Vec<PlanStep>,
    #[serde(rename = "final")]
    final_step: usize,
    goal_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("a plan needs at least 2 steps, got {0}")]
    TooShort(usize),
    #[error("step at position {position} is numbered {index}")]
    Misnumbered { position: usize, index: usize },
    #[error("step {step}: non-topological reference to step {target}")]
    NonTopological { step: usize, target: usize },
    #[error("final step must be the last step ({expected}), got {got}")]
    FinalNotLast { expected: usize, got: usize },
    #[error("step {0} does not contribute to the final step")]
    DeadStep(usize),
}

impl Plan {
    /// Build a plan from ops listed in order; steps are numbered from 1 and
    /// the last step is final.
    pub fn from_ops(ops: Vec<Op>, goal_type: impl Into<String>) -> Result<Self, StructureError> {
        let steps = ops
            .into_iter()
            .enumerate()
            .map(|(i, op)| PlanStep { index: i + 1, op })
            .collect::<Vec<_>>();
        let n = steps.len();
        Self::new(steps, n, goal_type.into())
    }

    pub fn new(steps: Vec<PlanStep>, final_step: usize, goal_type: String) -> Result<Self, StructureError> {
        if steps.len() < 2 {
            return Err(StructureError::TooShort(steps.len()));
        }
        for (pos, step) in steps.iter().enumerate() {
            if step.index != pos + 1 {
                return Err(StructureError::Misnumbered {
                    position: pos + 1,
                    index: step.index,
                });
            }
            for target in step.op.inputs() {
                if target == 0 || target >= step.index {
                    return Err(StructureError::NonTopological {
                        step: step.index,
                        target,
                    });
                }
            }
        }
        if final_step != steps.len() {
            return Err(StructureError::FinalNotLast {
                expected: steps.len(),
                got: final_step,
            });
        }
        let mut live = vec![false; steps.len() + 1];
        live[final_step] = true;
        for step in steps.iter().rev() {
            if live[step.index] {
                for i in step.op.inputs() {
                    live[i] = true;
                }
            }
        }
        if let Some(dead) = (1..=steps.len()).find(|&i| !live[i]) {
            return Err(StructureError::DeadStep(dead));
        }
        Ok(Plan {
            steps,
            final_step,
            goal_type,
        })
    }

    pub fn steps(&self) -> &[PlanStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// 1-based step lookup.
    pub fn step(&self, index: usize) -> &PlanStep {
        &self.steps[index - 1]
    }

    pub fn final_step(&self) -> usize {
        self.final_step
    }

    pub fn goal_type(&self) -> &str {
        &self.goal_type
    }

    /// Steps holding an entity slot that is still an open hole.
    pub fn holes(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.op.slot().is_some_and(Slot::is_hole))
            .map(|s| s.index)
            .collect()
    }

    /// Steps whose attribute literal is still open.
    pub fn literal_holes(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| {
                matches!(
                    s.op,
                    Op::Filter {
                        predicate: Predicate::AttributeCompare { value: None, .. },
                        ..
                    }
                )
            })
            .map(|s| s.index)
            .collect()
    }

    pub fn is_bound(&self) -> bool {
        self.holes().is_empty() && self.literal_holes().is_empty()
    }

    /// Steps whose slot is ambiguous (bound or open).
    pub fn ambiguous_steps(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.op.slot().is_some_and(Slot::is_ambiguous))
            .map(|s| s.index)
            .collect()
    }

    /// The bound ambiguous reference, if the plan has exactly one.
    pub fn ambiguous_ref(&self) -> Option<(usize, &str, &str)> {
        self.steps.iter().find_map(|s| match s.op.slot() {
            Some(Slot::Ambiguous { surface, slot_type }) => {
                Some((s.index, surface.as_str(), slot_type.as_str()))
            }
            _ => None,
        })
    }

    /// Steps that read step `index`.
    pub fn consumers(&self, index: usize) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.op.inputs().contains(&index))
            .map(|s| s.index)
            .collect()
    }

    /// Entity ids referenced by bound slots.
    pub fn referenced_entities(&self) -> BTreeSet<&str> {
        self.steps
            .iter()
            .filter_map(|s| match s.op.slot() {
                Some(Slot::Entity { entity }) => Some(entity.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn op_kinds(&self) -> impl Iterator<Item = OpKind> + '_ {
        self.steps.iter().map(|s| s.op.kind())
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Predicate> + '_ {
        self.steps.iter().filter_map(|s| match &s.op {
            Op::Filter { predicate, .. } => Some(predicate),
            _ => None,
        })
    }

    /// Replace the slot at `step`. Returns false when the step has no slot.
    pub fn bind_slot(&mut self, step: usize, slot: Slot) -> bool {
        match self.steps.get_mut(step.wrapping_sub(1)).and_then(|s| s.op.slot_mut()) {
            Some(s) => {
                *s = slot;
                true
            }
            None => false,
        }
    }

    /// Fill an open attribute literal at `step`.
    pub fn bind_literal(&mut self, step: usize, literal: Literal) -> bool {
        match self.steps.get_mut(step.wrapping_sub(1)).map(|s| &mut s.op) {
            Some(Op::Filter {
                predicate: Predicate::AttributeCompare { value, .. },
                ..
            }) => {
                *value = Some(literal);
                true
            }
            _ => false,
        }
    }
}
