//! Plan interpreter with exact set semantics.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{EntityIx, KnowledgeGraph};
use crate::plan::{check_bindings, typecheck, Op, Plan, Predicate, Slot, TypeError};

pub type EntitySet = BTreeSet<EntityIx>;

/// Entity bound to a slot, keyed by the step that holds the slot. Used for
/// open holes and for the ambiguous seed of one reasoning branch.
pub type Binding = BTreeMap<usize, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("step {0}: slot is not bound")]
    UnboundHole(usize),
    #[error("step {0}: attribute literal is not bound")]
    UnboundLiteral(usize),
    #[error("step {step}: bound entity `{entity}` is not in the graph")]
    UnknownEntity { step: usize, entity: String },
    #[error("step {step}: bound entity `{entity}` has type `{actual}`, slot needs `{expected}`")]
    BindingType {
        step: usize,
        entity: String,
        expected: String,
        actual: String,
    },
    #[error("plan does not typecheck against the graph: {0:?}")]
    IllTyped(Vec<TypeError>),
    #[error("unknown ambiguous surface `{0}`")]
    UnknownSurface(String),
    #[error("every reasoning branch is empty")]
    AllBranchesEmpty,
}

/// One materialized step. `multiplicity` is present on traversal and
/// group-by steps: for each member, the number of distinct input entities
/// that reached it (1 for every member of an atomic step).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StepResult {
    pub set: EntitySet,
    pub multiplicity: Option<BTreeMap<EntityIx, u32>>,
}

/// All intermediate results of one execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub steps: Vec<StepResult>,
}

impl Execution {
    pub fn final_set(&self) -> &EntitySet {
        &self.steps.last().expect("plans have steps").set
    }

    pub fn step(&self, index: usize) -> &StepResult {
        &self.steps[index - 1]
    }

    /// Distinct entities materialized by any step.
    pub fn involved(&self) -> EntitySet {
        self.steps.iter().flat_map(|s| s.set.iter().copied()).collect()
    }
}

/// Type-check `plan` against the graph, then run it. Every hole and the
/// ambiguous seed (if any) must be covered by `binding`.
pub fn execute_plan(plan: &Plan, graph: &KnowledgeGraph, binding: &Binding) -> Result<Execution, ExecError> {
    typecheck(plan, graph.schema()).map_err(ExecError::IllTyped)?;
    check_bindings(plan, graph).map_err(ExecError::IllTyped)?;
    let partial = run_partial(plan, graph, binding)?;
    let mut steps = Vec::with_capacity(partial.len());
    for (i, r) in partial.into_iter().enumerate() {
        match r {
            Some(r) => steps.push(r),
            None => return Err(first_unbound(plan, binding, i + 1)),
        }
    }
    Ok(Execution { steps })
}

fn first_unbound(plan: &Plan, binding: &Binding, upto: usize) -> ExecError {
    for step in &plan.steps()[..upto] {
        match step.op.slot() {
            Some(Slot::Hole { .. }) | Some(Slot::Ambiguous { .. }) if !binding.contains_key(&step.index) => {
                return ExecError::UnboundHole(step.index)
            }
            _ => {}
        }
        if let Op::Filter {
            predicate: Predicate::AttributeCompare { value: None, .. },
            ..
        } = step.op
        {
            return ExecError::UnboundLiteral(step.index);
        }
    }
    ExecError::UnboundHole(upto)
}

/// Resolve the entity for a slot: explicit entities resolve directly, holes
/// and ambiguous references through `binding`. `Ok(None)` means unbound.
fn resolve(
    graph: &KnowledgeGraph,
    step: usize,
    slot: &Slot,
    expected: &str,
    binding: &Binding,
) -> Result<Option<EntityIx>, ExecError> {
    let id = match slot {
        Slot::Entity { entity } => entity,
        Slot::Hole { .. } | Slot::Ambiguous { .. } => match binding.get(&step) {
            Some(id) => id,
            None => return Ok(None),
        },
    };
    let ix = graph.entity_ix(id).ok_or_else(|| ExecError::UnknownEntity {
        step,
        entity: id.clone(),
    })?;
    let actual = &graph.entity(ix).entity_type;
    if actual != expected {
        return Err(ExecError::BindingType {
            step,
            entity: id.clone(),
            expected: expected.to_string(),
            actual: actual.clone(),
        });
    }
    Ok(Some(ix))
}

/// Run every step whose inputs and slots are available. Steps that depend
/// on an unbound hole or literal come back as `None`. Assumes the plan
/// typechecks against the graph's schema.
pub(crate) fn run_partial(
    plan: &Plan,
    graph: &KnowledgeGraph,
    binding: &Binding,
) -> Result<Vec<Option<StepResult>>, ExecError> {
    let schema = graph.schema();
    let mut results: Vec<Option<StepResult>> = Vec::with_capacity(plan.len());

    for step in plan.steps() {
        let get = |i: usize| results[i - 1].as_ref();
        let out = match &step.op {
            Op::Atomic {
                seed,
                relation,
                direction,
            } => {
                let rel_ix = schema.relation_ix(relation).expect("typechecked");
                let near = schema.relation_at(rel_ix).near_type(*direction);
                resolve(graph, step.index, seed, near, binding)?.map(|seed| {
                    let set: EntitySet = graph.neighbors_ix(seed, rel_ix, *direction).iter().copied().collect();
                    let multiplicity = set.iter().map(|&e| (e, 1)).collect();
                    StepResult {
                        set,
                        multiplicity: Some(multiplicity),
                    }
                })
            }
            Op::Join {
                input,
                relation,
                direction,
            } => get(*input).map(|inp| {
                let rel_ix = schema.relation_ix(relation).expect("typechecked");
                let mut counts: BTreeMap<EntityIx, u32> = BTreeMap::new();
                for &src in &inp.set {
                    for &n in graph.neighbors_ix(src, rel_ix, *direction) {
                        *counts.entry(n).or_default() += 1;
                    }
                }
                StepResult {
                    set: counts.keys().copied().collect(),
                    multiplicity: Some(counts),
                }
            }),
            Op::Filter { input, predicate } => {
                let Some(inp) = get(*input) else {
                    results.push(None);
                    continue;
                };
                match predicate {
                    Predicate::HasRelation {
                        relation,
                        direction,
                        target,
                    } => {
                        let rel_ix = schema.relation_ix(relation).expect("typechecked");
                        let far = schema.relation_at(rel_ix).far_type(*direction);
                        let target = match target {
                            None => Some(None),
                            Some(t) => resolve(graph, step.index, t, far, binding)?.map(Some),
                        };
                        target.map(|target| StepResult {
                            set: inp
                                .set
                                .iter()
                                .copied()
                                .filter(|&e| {
                                    let ns = graph.neighbors_ix(e, rel_ix, *direction);
                                    match target {
                                        None => !ns.is_empty(),
                                        Some(t) => ns.binary_search(&t).is_ok(),
                                    }
                                })
                                .collect(),
                            multiplicity: None,
                        })
                    }
                    Predicate::CountAtLeast { k } => {
                        let counts = inp.multiplicity.as_ref().expect("group-by carries counts");
                        Some(StepResult {
                            set: inp.set.iter().copied().filter(|e| counts[e] >= *k).collect(),
                            multiplicity: None,
                        })
                    }
                    Predicate::AttributeCompare {
                        attribute,
                        comparator,
                        value,
                    } => value.as_ref().map(|value| {
                        let attr_ix = schema.attribute_ix(attribute).expect("typechecked");
                        StepResult {
                            set: inp
                                .set
                                .iter()
                                .copied()
                                .filter(|&e| {
                                    graph
                                        .attribute_values(e, attr_ix)
                                        .iter()
                                        .any(|v| comparator.holds(v, value))
                                })
                                .collect(),
                            multiplicity: None,
                        }
                    }),
                }
            }
            Op::Union { left, right } => binary(get(*left), get(*right), |l, r| l.union(r).copied().collect()),
            Op::Intersection { left, right } => {
                binary(get(*left), get(*right), |l, r| l.intersection(r).copied().collect())
            }
            Op::Difference { left, right } => {
                binary(get(*left), get(*right), |l, r| l.difference(r).copied().collect())
            }
            Op::GroupBy { input } => get(*input).cloned(),
        };
        results.push(out);
    }
    Ok(results)
}

fn binary(
    l: Option<&StepResult>,
    r: Option<&StepResult>,
    f: impl Fn(&EntitySet, &EntitySet) -> EntitySet,
) -> Option<StepResult> {
    Some(StepResult {
        set: f(&l?.set, &r?.set),
        multiplicity: None,
    })
}

/// Steps that must be non-empty whenever the final step is non-empty,
/// indexed by position. Used to prune partial bindings early.
pub(crate) fn necessary_steps(plan: &Plan) -> Vec<bool> {
    let mut need = vec![false; plan.len()];
    need[plan.final_step() - 1] = true;
    for step in plan.steps().iter().rev() {
        if !need[step.index - 1] {
            continue;
        }
        match step.op {
            Op::Join { input, .. } | Op::Filter { input, .. } | Op::GroupBy { input } => need[input - 1] = true,
            Op::Intersection { left, right } => {
                need[left - 1] = true;
                need[right - 1] = true;
            }
            Op::Difference { left, .. } => need[left - 1] = true,
            Op::Union { .. } | Op::Atomic { .. } => {}
        }
    }
    need
}
