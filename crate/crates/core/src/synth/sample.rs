//! Random growth of plan skeletons whose entity slots are typed holes.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use super::SynthesisConfig;
use crate::graph::{Direction, RelationDef, Schema, ValueKind};
use crate::plan::{typecheck, validate_heuristics, Comparator, Op, OpKind, Plan, Predicate, Slot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("no valid plan after {attempts} attempts; last problems: {}", last.join("; "))]
    ExhaustedAttempts { attempts: usize, last: Vec<String> },
}

/// What the first seed slot of a skeleton should be.
#[derive(Debug, Clone, Copy)]
pub enum SeedKind<'a> {
    /// An ordinary typed hole of any type.
    Plain,
    /// A hole reserved for an ambiguous surface whose type is one of these.
    Ambiguous(&'a [String]),
}

/// Sample a skeleton that typechecks and satisfies every heuristic rule,
/// retrying up to `config.max_attempts_per_plan` times.
pub fn sample_plan_skeleton<R: Rng + ?Sized>(
    schema: &Schema,
    config: &SynthesisConfig,
    seed: SeedKind<'_>,
    rng: &mut R,
) -> Result<Plan, SampleError> {
    let heuristics = config.heuristics();
    let mut last = vec!["no legal starting traversal".to_string()];
    for _ in 0..config.max_attempts_per_plan {
        let Some(plan) = Grower::new(schema, config).grow(seed, rng) else {
            continue;
        };
        let problems: Vec<String> = match typecheck(&plan, schema) {
            Err(errors) => errors.iter().map(ToString::to_string).collect(),
            Ok(_) => match validate_heuristics(&plan, &heuristics) {
                Err(violations) => violations.iter().map(ToString::to_string).collect(),
                Ok(()) => return Ok(plan),
            },
        };
        last = problems;
    }
    Err(SampleError::ExhaustedAttempts {
        attempts: config.max_attempts_per_plan,
        last,
    })
}

type Traversal<'s> = (&'s RelationDef, Direction);

struct Grower<'s> {
    schema: &'s Schema,
    config: &'s SynthesisConfig,
    ops: Vec<Op>,
    types: Vec<String>,
}

impl<'s> Grower<'s> {
    fn new(schema: &'s Schema, config: &'s SynthesisConfig) -> Self {
        Grower {
            schema,
            config,
            ops: Vec::new(),
            types: Vec::new(),
        }
    }

    fn push(&mut self, op: Op, ty: &str) -> usize {
        self.ops.push(op);
        self.types.push(ty.to_string());
        self.ops.len()
    }

    fn all_traversals(&self) -> Vec<Traversal<'s>> {
        self.schema
            .relations
            .iter()
            .flat_map(|r| [(r, Direction::Forward), (r, Direction::Reverse)])
            .collect()
    }

    fn traversals_from(&self, ty: &str) -> Vec<Traversal<'s>> {
        self.all_traversals()
            .into_iter()
            .filter(|(r, d)| r.near_type(*d) == ty)
            .collect()
    }

    /// Traversal that produced step `idx`, if it is one.
    fn traversal_of(&self, idx: usize) -> Option<(&str, Direction)> {
        match &self.ops[idx - 1] {
            Op::Atomic {
                relation,
                direction,
                ..
            }
            | Op::Join {
                relation,
                direction,
                ..
            } => Some((relation.as_str(), *direction)),
            _ => None,
        }
    }

    /// Chains of one or two traversals from a fresh hole that end at `ty`.
    fn chains_to(&self, ty: &str, max_len: usize) -> Vec<Vec<Traversal<'s>>> {
        let all = self.all_traversals();
        let mut out: Vec<Vec<Traversal<'s>>> = all
            .iter()
            .filter(|(r, d)| r.far_type(*d) == ty)
            .map(|&t| vec![t])
            .collect();
        if max_len >= 2 {
            for &(r1, d1) in &all {
                for (r2, d2) in self.traversals_from(r1.far_type(d1)) {
                    let backtrack = r2.id == r1.id && d2 == d1.flip();
                    if r2.far_type(d2) == ty && !backtrack {
                        out.push(vec![(r1, d1), (r2, d2)]);
                    }
                }
            }
        }
        out
    }

    fn grow<R: Rng + ?Sized>(mut self, seed: SeedKind<'_>, rng: &mut R) -> Option<Plan> {
        let config = self.config;
        let ((r, d), seed_slot) = match seed {
            SeedKind::Plain => {
                let all = self.all_traversals();
                let &(r, d) = all.choose(rng)?;
                ((r, d), Slot::hole(r.near_type(d)))
            }
            SeedKind::Ambiguous(types) => {
                let options: Vec<(Traversal<'s>, &String)> = types
                    .iter()
                    .flat_map(|t| self.traversals_from(t).into_iter().map(move |tr| (tr, t)))
                    .collect();
                let &((r, d), t) = options.choose(rng)?;
                (
                    (r, d),
                    Slot::Hole {
                        slot_type: t.clone(),
                        ambiguous: true,
                    },
                )
            }
        };
        let mut tip = self.push(
            Op::Atomic {
                seed: seed_slot,
                relation: r.id.clone(),
                direction: d,
            },
            r.far_type(d),
        );

        loop {
            let len = self.ops.len();
            if len >= config.min_steps {
                let p = (len - config.min_steps + 1) as f64 / (config.max_steps - config.min_steps + 1) as f64;
                if rng.random::<f64>() < p {
                    break;
                }
            }
            let tip_type = self.types[tip - 1].clone();
            let room = config.max_steps - len;
            let candidates = self.legal_ops(tip, &tip_type, room);
            let weights: Vec<f64> = candidates.iter().map(|&k| config.weight(k)).collect();
            let Ok(dist) = WeightedIndex::new(&weights) else {
                if len >= config.min_steps {
                    break;
                }
                return None;
            };
            tip = match candidates[dist.sample(rng)] {
                OpKind::Join => self.add_join(tip, &tip_type, rng)?,
                OpKind::Filter => self.add_filter(tip, &tip_type, rng)?,
                OpKind::GroupBy => self.add_group_count(tip, &tip_type, rng),
                kind => self.add_set_op(kind, tip, &tip_type, room, rng)?,
            };
        }
        let goal = self.types[tip - 1].clone();
        Plan::from_ops(self.ops, goal).ok()
    }

    fn legal_ops(&self, tip: usize, tip_type: &str, room: usize) -> Vec<OpKind> {
        let mut out = Vec::new();
        if room == 0 {
            return out;
        }
        let has_traversal = !self.traversals_from(tip_type).is_empty();
        if has_traversal {
            out.push(OpKind::Join);
        }
        if has_traversal || self.schema.attributes_of(tip_type).next().is_some() {
            out.push(OpKind::Filter);
        }
        // Counting only discriminates after a join; atomic results all have
        // multiplicity 1.
        if room >= 2 && matches!(self.ops[tip - 1], Op::Join { .. }) {
            out.push(OpKind::GroupBy);
        }
        if room >= 2 && !self.chains_to(tip_type, room - 1).is_empty() {
            out.extend([OpKind::Union, OpKind::Intersection, OpKind::Difference]);
        }
        out
    }

    fn add_join<R: Rng + ?Sized>(&mut self, tip: usize, tip_type: &str, rng: &mut R) -> Option<usize> {
        let all = self.traversals_from(tip_type);
        // Walking straight back over the relation just taken only returns a
        // superset of where the plan came from.
        let forward: Vec<_> = match self.traversal_of(tip) {
            Some((rel, dir)) => all
                .iter()
                .copied()
                .filter(|(r, d)| !(r.id == rel && *d == dir.flip()))
                .collect(),
            None => all.clone(),
        };
        let pool = if forward.is_empty() { &all } else { &forward };
        let &(r, d) = pool.choose(rng)?;
        Some(self.push(
            Op::Join {
                input: tip,
                relation: r.id.clone(),
                direction: d,
            },
            r.far_type(d),
        ))
    }

    fn add_filter<R: Rng + ?Sized>(&mut self, tip: usize, tip_type: &str, rng: &mut R) -> Option<usize> {
        let came_by = self.traversal_of(tip).map(|(r, d)| (r.to_string(), d));
        let relations: Vec<Traversal<'s>> = self.traversals_from(tip_type);
        let attributes: Vec<_> = self.schema.attributes_of(tip_type).collect();
        let use_relation = match (relations.is_empty(), attributes.is_empty()) {
            (true, true) => return None,
            (false, true) => true,
            (true, false) => false,
            (false, false) => rng.random_bool(0.5),
        };
        let predicate = if use_relation {
            let &(r, d) = relations.choose(rng)?;
            let trivially_true = came_by
                .as_ref()
                .is_some_and(|(rel, dir)| *rel == r.id && *dir == d.flip());
            let target = if trivially_true || rng.random_bool(0.5) {
                Some(Slot::hole(r.far_type(d)))
            } else {
                None
            };
            Predicate::HasRelation {
                relation: r.id.clone(),
                direction: d,
                target,
            }
        } else {
            let attr = attributes.choose(rng)?;
            let comparator = match attr.value_kind {
                ValueKind::String => Comparator::Eq,
                ValueKind::Integer | ValueKind::DateYear => *[
                    Comparator::Lt,
                    Comparator::Le,
                    Comparator::Ge,
                    Comparator::Gt,
                    Comparator::Eq,
                ]
                .choose(rng)?,
            };
            Predicate::AttributeCompare {
                attribute: attr.id.clone(),
                comparator,
                value: None,
            }
        };
        Some(self.push(Op::Filter { input: tip, predicate }, tip_type))
    }

    fn add_group_count<R: Rng + ?Sized>(&mut self, tip: usize, tip_type: &str, rng: &mut R) -> usize {
        let group = self.push(Op::GroupBy { input: tip }, tip_type);
        let k = if rng.random_bool(0.75) { 2 } else { 3 };
        self.push(
            Op::Filter {
                input: group,
                predicate: Predicate::CountAtLeast { k },
            },
            tip_type,
        )
    }

    fn add_set_op<R: Rng + ?Sized>(
        &mut self,
        kind: OpKind,
        tip: usize,
        tip_type: &str,
        room: usize,
        rng: &mut R,
    ) -> Option<usize> {
        let chains = self.chains_to(tip_type, room - 1);
        let chain = chains.choose(rng)?.clone();
        let (r0, d0) = chain[0];
        let mut other = self.push(
            Op::Atomic {
                seed: Slot::hole(r0.near_type(d0)),
                relation: r0.id.clone(),
                direction: d0,
            },
            r0.far_type(d0),
        );
        for &(r, d) in &chain[1..] {
            other = self.push(
                Op::Join {
                    input: other,
                    relation: r.id.clone(),
                    direction: d,
                },
                r.far_type(d),
            );
        }
        let op = match kind {
            OpKind::Union => Op::Union {
                left: tip,
                right: other,
            },
            OpKind::Intersection => Op::Intersection {
                left: tip,
                right: other,
            },
            _ => Op::Difference {
                left: tip,
                right: other,
            },
        };
        Some(self.push(op, tip_type))
    }
}
