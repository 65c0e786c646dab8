//! Binding skeleton holes to concrete entities and literals.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use thiserror::Error;

use super::exec::{necessary_steps, run_partial, Binding, ExecError};
use super::select::{retain_in_pool, EntitySelector, SelectionRequest};
use super::SynthesisConfig;
use crate::graph::{Entity, EntityIx, KnowledgeGraph, Literal};
use crate::plan::{render_steps, Op, Plan, Predicate, Slot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealizeError {
    #[error("no binding of the skeleton yields a usable answer ({tried} bindings tried)")]
    NoViableBinding { tried: usize },
    #[error("hole at step {step} has type `{slot_type}` with no entities in the graph")]
    EmptyType { step: usize, slot_type: String },
    #[error(transparent)]
    Exec(#[from] ExecError),
}

#[derive(Debug, Clone)]
pub struct Realization {
    pub plan: Plan,
    /// Bindings tried before the accepted one, including it.
    pub tried: usize,
    /// Holes for which the selector returned at least one usable id.
    pub selector_hits: usize,
    /// Selector calls that failed or returned only unusable ids.
    pub selector_misses: usize,
}

struct Hole {
    step: usize,
    /// Candidate fillings in the order they are tried.
    options: Vec<Filling>,
}

#[derive(Clone)]
enum Filling {
    Slot(Slot),
    Literal(Literal),
}

/// Bind every hole of `skeleton` so that the plan executes to a non-empty
/// answer no larger than `config.max_answer_size` (on at least two branches
/// for an ambiguous seed). Each entity hole draws a pool of
/// `config.candidate_pool` random candidates; the selector's picks are tried
/// first, then the rest of the pool in random order. Holes are bound in step
/// order with backtracking, and partial bindings that already empty a step
/// the answer depends on are pruned.
pub fn realize_entities<R: Rng + ?Sized>(
    skeleton: &Plan,
    graph: &KnowledgeGraph,
    selector: &dyn EntitySelector,
    config: &SynthesisConfig,
    rng: &mut R,
) -> Result<Realization, RealizeError> {
    let rendered = render_steps(skeleton, graph).unwrap_or_default();
    let mut selector_hits = 0;
    let mut selector_misses = 0;
    let mut holes = Vec::new();

    for step in skeleton.steps() {
        match (&step.op, step.op.slot()) {
            (_, Some(Slot::Hole { slot_type, ambiguous: true })) => {
                let mut surfaces: Vec<&str> = graph.surfaces_for_type(slot_type, 2);
                surfaces.shuffle(rng);
                surfaces.truncate(config.candidate_pool);
                holes.push(Hole {
                    step: step.index,
                    options: surfaces
                        .into_iter()
                        .map(|s| Filling::Slot(Slot::ambiguous(s, slot_type.clone())))
                        .collect(),
                });
            }
            (_, Some(Slot::Hole { slot_type, .. })) => {
                let all = graph.entities_of_type_ix(slot_type).unwrap_or(&[]);
                if all.is_empty() {
                    return Err(RealizeError::EmptyType {
                        step: step.index,
                        slot_type: slot_type.clone(),
                    });
                }
                let mut pool: Vec<EntityIx> = all.choose_multiple(rng, config.candidate_pool).copied().collect();
                pool.shuffle(rng);
                let entities: Vec<&Entity> = pool.iter().map(|&ix| graph.entity(ix)).collect();
                let request = SelectionRequest {
                    placeholder: format!("SUBJECT_{}", crate::plan::placeholder_key(slot_type)),
                    slot_type,
                    candidates: &entities,
                    rendered_plan: &rendered,
                };
                let mut preferred = match selector.select(&request) {
                    Ok(ids) => {
                        let (kept, dropped) = retain_in_pool(ids, &entities);
                        if !dropped.is_empty() {
                            log::warn!(
                                "selector `{}` proposed ids outside the pool for step {}: {dropped:?}",
                                selector.name(),
                                step.index
                            );
                            if kept.is_empty() {
                                selector_misses += 1;
                            }
                        }
                        kept
                    }
                    Err(e) => {
                        log::warn!("selector `{}` failed for step {}: {e}", selector.name(), step.index);
                        selector_misses += 1;
                        Vec::new()
                    }
                };
                if !preferred.is_empty() {
                    selector_hits += 1;
                }
                for e in &entities {
                    if !preferred.contains(&e.id) {
                        preferred.push(e.id.clone());
                    }
                }
                holes.push(Hole {
                    step: step.index,
                    options: preferred.into_iter().map(|id| Filling::Slot(Slot::entity(id))).collect(),
                });
            }
            (
                Op::Filter {
                    predicate:
                        Predicate::AttributeCompare {
                            attribute,
                            value: None,
                            ..
                        },
                    ..
                },
                _,
            ) => {
                let mut values: Vec<Literal> = graph
                    .schema()
                    .attribute_ix(attribute)
                    .map(|ix| graph.observed_values(ix).into_iter().cloned().collect())
                    .unwrap_or_default();
                values.shuffle(rng);
                values.truncate(config.candidate_pool);
                holes.push(Hole {
                    step: step.index,
                    options: values.into_iter().map(Filling::Literal).collect(),
                });
            }
            _ => {}
        }
    }

    let mut search = Search {
        graph,
        config,
        need: necessary_steps(skeleton),
        holes: &holes,
        tried: 0,
        budget: config.candidate_pool * holes.len().max(1) * 2,
    };
    let mut work = skeleton.clone();
    if holes.is_empty() {
        return match search.acceptable(&work)? {
            Verdict::Accept => Ok(Realization {
                plan: work,
                tried: 1,
                selector_hits,
                selector_misses,
            }),
            _ => Err(RealizeError::NoViableBinding { tried: 1 }),
        };
    }
    match search.descend(&mut work, 0)? {
        true => Ok(Realization {
            plan: work,
            tried: search.tried,
            selector_hits,
            selector_misses,
        }),
        false => Err(RealizeError::NoViableBinding { tried: search.tried }),
    }
}

enum Verdict {
    Accept,
    Prune,
    Continue,
}

struct Search<'a> {
    graph: &'a KnowledgeGraph,
    config: &'a SynthesisConfig,
    need: Vec<bool>,
    holes: &'a [Hole],
    tried: usize,
    budget: usize,
}

impl Search<'_> {
    fn descend(&mut self, work: &mut Plan, depth: usize) -> Result<bool, ExecError> {
        let holes = self.holes;
        let hole = &holes[depth];
        for option in &hole.options {
            if self.tried >= self.budget {
                return Ok(false);
            }
            self.tried += 1;
            let saved = work.clone();
            match option {
                Filling::Slot(slot) => {
                    work.bind_slot(hole.step, slot.clone());
                }
                Filling::Literal(v) => {
                    work.bind_literal(hole.step, v.clone());
                }
            }
            match self.acceptable(work)? {
                Verdict::Accept if depth + 1 == self.holes.len() => return Ok(true),
                Verdict::Prune => {}
                _ if depth + 1 < self.holes.len() => {
                    if self.descend(work, depth + 1)? {
                        return Ok(true);
                    }
                }
                _ => {}
            }
            *work = saved;
        }
        Ok(false)
    }

    /// Judge a (possibly partial) binding. Unbound steps are unknown and
    /// never cause pruning.
    fn acceptable(&self, plan: &Plan) -> Result<Verdict, ExecError> {
        let (bindings, min_branches) = match plan.ambiguous_ref() {
            Some((step, surface, slot_type)) => {
                let ids = self
                    .graph
                    .ambiguous_candidates(surface, slot_type)
                    .map_err(|_| ExecError::UnknownSurface(surface.to_string()))?;
                let bindings: Vec<Binding> = ids
                    .into_iter()
                    .map(|ix| Binding::from([(step, self.graph.entity(ix).id.clone())]))
                    .collect();
                (bindings, 2)
            }
            None => (vec![Binding::new()], 1),
        };
        let mut alive = 0;
        let mut complete = true;
        for binding in &bindings {
            let results = run_partial(plan, self.graph, binding)?;
            let final_result = results.last().expect("plans have steps");
            if final_result.is_none() {
                complete = false;
            }
            let dead = results
                .iter()
                .zip(&self.need)
                .any(|(r, &need)| need && r.as_ref().is_some_and(|r| r.set.is_empty()));
            if let Some(r) = final_result {
                if r.set.len() > self.config.max_answer_size {
                    return Ok(Verdict::Prune);
                }
            }
            if !dead {
                alive += 1;
            }
        }
        Ok(if alive < min_branches {
            Verdict::Prune
        } else if complete {
            Verdict::Accept
        } else {
            Verdict::Continue
        })
    }
}
