//! Style rules that reject degenerate or repetitive plans.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Op, Plan, Predicate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// A set operation chained directly on the same kind of set operation
    /// sharing an operand, e.g. `Union(Union(a, b), b)`.
    R1,
    /// A set operation whose two operands are the same step.
    R2,
    /// A difference whose right operand contains the left one by
    /// construction, so the result is always empty.
    R3,
    /// A group-by that no count filter consumes.
    R4,
    /// More than one ambiguous reference.
    R5,
    /// Step count outside the configured bounds.
    R6,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleViolation {
    pub rule: Rule,
    pub step: Option<usize>,
    pub message: String,
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(s) => write!(f, "{} at step {s}: {}", self.rule, self.message),
            None => write!(f, "{}: {}", self.rule, self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub min_steps: usize,
    pub max_steps: usize,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            min_steps: 2,
            max_steps: 8,
        }
    }
}

/// Apply rules R1-R6. The result depends only on the plan and config, and
/// violations come out ordered by step then rule.
pub fn validate_heuristics(plan: &Plan, config: &HeuristicConfig) -> Result<(), Vec<RuleViolation>> {
    let mut out = Vec::new();

    for step in plan.steps() {
        let idx = step.index;
        let kind = step.op.kind();
        if let Some((l, r)) = step.op.set_operands() {
            if l == r {
                out.push(RuleViolation {
                    rule: Rule::R2,
                    step: Some(idx),
                    message: format!("{kind} of step {l} with itself"),
                });
            }
            for (inner, other) in [(l, r), (r, l)] {
                let inner_op = &plan.step(inner).op;
                if inner_op.kind() == kind {
                    let (il, ir) = inner_op.set_operands().expect("set op");
                    if il == other || ir == other {
                        out.push(RuleViolation {
                            rule: Rule::R1,
                            step: Some(idx),
                            message: format!(
                                "repeated {kind} over step {other} (already an operand of step {inner})"
                            ),
                        });
                        break;
                    }
                }
            }
            if let Op::Difference { left, right } = step.op {
                if contains_by_construction(plan, right, left) {
                    out.push(RuleViolation {
                        rule: Rule::R3,
                        step: Some(idx),
                        message: format!("step {right} always contains step {left}; difference is empty"),
                    });
                }
            }
        }
        if let Op::GroupBy { .. } = step.op {
            let consumed = plan.consumers(idx).into_iter().any(|c| {
                matches!(
                    plan.step(c).op,
                    Op::Filter {
                        predicate: Predicate::CountAtLeast { .. },
                        ..
                    }
                )
            });
            if !consumed {
                out.push(RuleViolation {
                    rule: Rule::R4,
                    step: Some(idx),
                    message: "group-by is not consumed by a count filter".into(),
                });
            }
        }
    }

    let ambiguous = plan.ambiguous_steps();
    if ambiguous.len() > 1 {
        out.push(RuleViolation {
            rule: Rule::R5,
            step: Some(ambiguous[1]),
            message: format!("{} ambiguous references (at most one)", ambiguous.len()),
        });
    }
    if plan.len() < config.min_steps || plan.len() > config.max_steps {
        out.push(RuleViolation {
            rule: Rule::R6,
            step: None,
            message: format!(
                "{} steps outside [{}, {}]",
                plan.len(),
                config.min_steps,
                config.max_steps
            ),
        });
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// True when step `sup`'s result is a superset of step `sub`'s result for
/// every graph and binding, judged from the plan structure alone.
fn contains_by_construction(plan: &Plan, sup: usize, sub: usize) -> bool {
    if sup == sub {
        return true;
    }
    match plan.step(sup).op {
        Op::Union { left, right }
            if contains_by_construction(plan, left, sub) || contains_by_construction(plan, right, sub) =>
        {
            return true;
        }
        Op::GroupBy { input } if contains_by_construction(plan, input, sub) => return true,
        _ => {}
    }
    match plan.step(sub).op {
        Op::Filter { input, .. } | Op::GroupBy { input } | Op::Difference { left: input, .. } => {
            contains_by_construction(plan, sup, input)
        }
        Op::Intersection { left, right } => {
            contains_by_construction(plan, sup, left) || contains_by_construction(plan, sup, right)
        }
        _ => false,
    }
}
