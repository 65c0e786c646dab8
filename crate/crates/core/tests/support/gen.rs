//! Random small graphs and random fully bound plans over them.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use branchqa_core::graph::{
    AmbiguousName, AttributeDef, AttributeFact, Entity, EntityType, KnowledgeGraph, Literal, RelationDef, Schema,
    Triple, ValueKind,
};
use branchqa_core::plan::{Plan, Slot};
use branchqa_core::synth::{realize_entities, sample_plan_skeleton, OracleGreedy, SeedKind, SynthesisConfig};

pub struct RandomGraph {
    pub graph: KnowledgeGraph,
    pub triples: Vec<Triple>,
    pub attributes: Vec<AttributeFact>,
}

pub const SURFACE: &str = "Shared Name";

/// A random schema with 2 to 4 types (self-typed relations allowed), up to
/// `max_entities` entities, and at most one ambiguous surface.
pub fn random_graph<R: Rng>(rng: &mut R, max_entities: usize) -> RandomGraph {
    let n_types = rng.random_range(2..=4);
    let entity_types: Vec<EntityType> = (0..n_types)
        .map(|i| EntityType {
            id: format!("t{i}"),
            label: format!("thing{i}"),
            domain: if i % 2 == 0 { "even".into() } else { "odd".into() },
        })
        .collect();
    let relations: Vec<RelationDef> = (0..rng.random_range(2..=5))
        .map(|i| RelationDef {
            id: format!("r{i}"),
            label: format!("rel {i}"),
            source_type: format!("t{}", rng.random_range(0..n_types)),
            target_type: format!("t{}", rng.random_range(0..n_types)),
        })
        .collect();
    let attribute_defs = vec![
        AttributeDef {
            id: "year".into(),
            label: "year".into(),
            subject_type: format!("t{}", rng.random_range(0..n_types)),
            value_kind: ValueKind::DateYear,
        },
        AttributeDef {
            id: "colour".into(),
            label: "colour".into(),
            subject_type: format!("t{}", rng.random_range(0..n_types)),
            value_kind: ValueKind::String,
        },
    ];
    let schema = Schema {
        entity_types,
        relations: relations.clone(),
        attributes: attribute_defs.clone(),
    };

    let n_entities = rng.random_range(n_types.max(5)..=max_entities.max(n_types));
    let entities: Vec<Entity> = (0..n_entities)
        .map(|i| {
            let t = if i < n_types { i } else { rng.random_range(0..n_types) };
            Entity {
                id: format!("e{i:02}"),
                label: format!("Entity {i}"),
                entity_type: format!("t{t}"),
                aliases: vec![],
            }
        })
        .collect();
    let of_type = |t: &str| -> Vec<&Entity> { entities.iter().filter(|e| e.entity_type == t).collect() };

    let mut triples = BTreeSet::new();
    for _ in 0..rng.random_range(0..=n_entities * 3) {
        let r = relations.choose(rng).expect("relations");
        let (Some(s), Some(o)) = (of_type(&r.source_type).choose(rng).copied(), of_type(&r.target_type).choose(rng).copied())
        else {
            continue;
        };
        triples.insert(Triple {
            subject: s.id.clone(),
            relation: r.id.clone(),
            object: o.id.clone(),
        });
    }
    let triples: Vec<Triple> = triples.into_iter().collect();

    let mut attributes = Vec::new();
    for def in &attribute_defs {
        for e in of_type(&def.subject_type) {
            if !rng.random_bool(0.7) {
                continue;
            }
            let mut values = BTreeSet::new();
            for _ in 0..rng.random_range(1..=2) {
                values.insert(match def.value_kind {
                    ValueKind::String => Literal::Str(["red", "green", "blue"].choose(rng).unwrap().to_string()),
                    _ => Literal::Int(rng.random_range(1990..2000)),
                });
            }
            for value in values {
                attributes.push(AttributeFact {
                    subject: e.id.clone(),
                    attribute: def.id.clone(),
                    value,
                });
            }
        }
    }

    let mut ambiguity = Vec::new();
    let t = format!("t{}", rng.random_range(0..n_types));
    let candidates = of_type(&t);
    if candidates.len() >= 2 {
        let k = rng.random_range(2..=candidates.len().min(3));
        let picked: Vec<String> = candidates.choose_multiple(rng, k).map(|e| e.id.clone()).collect();
        ambiguity.push(AmbiguousName {
            surface: SURFACE.into(),
            entities: picked,
        });
    }

    let graph = KnowledgeGraph::from_parts(schema, entities, triples.clone(), attributes.clone(), ambiguity)
        .expect("generated graph is valid");
    RandomGraph {
        graph,
        triples,
        attributes,
    }
}

/// A random skeleton for `graph`, with holes bound either by realization
/// (non-empty answers) or uniformly at random (often empty answers).
/// Returns `None` when the schema admits no plan or binding.
pub fn random_bound_plan<R: Rng>(rng: &mut R, graph: &KnowledgeGraph, config: &SynthesisConfig) -> Option<Plan> {
    let ambiguous_types: Vec<String> = graph
        .schema()
        .entity_types
        .iter()
        .filter(|t| !graph.surfaces_for_type(&t.id, 2).is_empty())
        .map(|t| t.id.clone())
        .collect();
    let seed = if !ambiguous_types.is_empty() && rng.random_bool(0.25) {
        SeedKind::Ambiguous(&ambiguous_types)
    } else {
        SeedKind::Plain
    };
    let skeleton = sample_plan_skeleton(graph.schema(), config, seed, rng).ok()?;
    if rng.random_bool(0.5) {
        if let Ok(r) = realize_entities(&skeleton, graph, &OracleGreedy, config, rng) {
            return Some(r.plan);
        }
    }
    bind_randomly(rng, graph, skeleton)
}

pub fn bind_randomly<R: Rng>(rng: &mut R, graph: &KnowledgeGraph, mut plan: Plan) -> Option<Plan> {
    for step in plan.holes() {
        let slot = match plan.step(step).op.slot()? {
            Slot::Hole {
                slot_type,
                ambiguous: true,
            } => {
                let surface = graph.surfaces_for_type(slot_type, 2).choose(rng)?.to_string();
                Slot::ambiguous(surface, slot_type.clone())
            }
            Slot::Hole { slot_type, .. } => {
                let ids = graph.entities_of_type(slot_type).ok()?;
                Slot::entity(ids.choose(rng)?.to_string())
            }
            _ => continue,
        };
        plan.bind_slot(step, slot);
    }
    for step in plan.literal_holes() {
        let attribute = match &plan.step(step).op {
            branchqa_core::plan::Op::Filter {
                predicate: branchqa_core::plan::Predicate::AttributeCompare { attribute, .. },
                ..
            } => attribute.clone(),
            _ => continue,
        };
        let ix = graph.schema().attribute_ix(&attribute)?;
        let observed: Vec<Literal> = graph.observed_values(ix).into_iter().cloned().collect();
        let value = match observed.choose(rng) {
            Some(v) if rng.random_bool(0.8) => v.clone(),
            _ => match graph.schema().attribute(&attribute)?.value_kind {
                ValueKind::String => Literal::Str("purple".into()),
                _ => Literal::Int(rng.random_range(1985..2005)),
            },
        };
        plan.bind_literal(step, value);
    }
    plan.is_bound().then_some(plan)
}
