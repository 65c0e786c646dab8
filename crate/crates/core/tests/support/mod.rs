//! Shared test material: small graphs, hand-built plans and the checks
//! behind each acceptance criterion.

#![allow(dead_code)]

pub mod criteria;
pub mod gen;
pub mod oracle;

use std::path::PathBuf;

use branchqa_core::graph::{
    AmbiguousName, AttributeDef, AttributeFact, Direction, Entity, EntityType, KnowledgeGraph, GraphPaths,
    RelationDef, Schema, Triple, ValueKind,
};
use branchqa_core::plan::{Op, Plan, Predicate, Slot};

/// The shipped film fixture, found from either crate's manifest directory.
pub fn fixture_dir() -> PathBuf {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let local = manifest.join("fixtures/film");
    if local.is_dir() {
        local
    } else {
        manifest.join("../core/fixtures/film")
    }
}

pub fn fixture_graph() -> KnowledgeGraph {
    KnowledgeGraph::load(&GraphPaths::in_dir(&fixture_dir())).expect("fixture graph loads")
}

fn ty(id: &str, domain: &str) -> EntityType {
    EntityType {
        id: id.into(),
        label: id.into(),
        domain: domain.into(),
    }
}

fn rel(id: &str, label: &str, source: &str, target: &str) -> RelationDef {
    RelationDef {
        id: id.into(),
        label: label.into(),
        source_type: source.into(),
        target_type: target.into(),
    }
}

pub fn entity(id: &str, label: &str, entity_type: &str) -> Entity {
    Entity {
        id: id.into(),
        label: label.into(),
        entity_type: entity_type.into(),
        aliases: vec![],
    }
}

pub fn triple(s: &str, r: &str, o: &str) -> Triple {
    Triple {
        subject: s.into(),
        relation: r.into(),
        object: o.into(),
    }
}

pub fn toy_schema() -> Schema {
    Schema {
        entity_types: ["film", "actor", "director", "genre", "award"]
            .into_iter()
            .map(|t| ty(t, "movie"))
            .collect(),
        relations: vec![
            rel("cast_member", "cast member", "film", "actor"),
            rel("directed_by", "director", "film", "director"),
            rel("genre", "genre", "film", "genre"),
            rel("won_award", "award", "actor", "award"),
        ],
        attributes: vec![AttributeDef {
            id: "release_year".into(),
            label: "release year".into(),
            subject_type: "film".into(),
            value_kind: ValueKind::DateYear,
        }],
    }
}

pub fn toy_entities() -> Vec<Entity> {
    vec![
        entity("film_a", "FilmA", "film"),
        entity("film_b", "FilmB", "film"),
        entity("film_p", "FilmP", "film"),
        entity("film_q", "FilmQ", "film"),
        entity("actor_1", "Actor1", "actor"),
        entity("actor_2", "Actor2", "actor"),
        entity("actor_3", "Actor3", "actor"),
        entity("director_x", "DirectorX", "director"),
        entity("drama", "drama", "genre"),
        entity("romance", "romance", "genre"),
        entity("academy_award", "Academy Award", "award"),
    ]
}

/// Eight triples. Only FilmA has a director; FilmP and FilmQ share one genre.
pub fn toy_triples() -> Vec<Triple> {
    vec![
        triple("film_a", "cast_member", "actor_1"),
        triple("film_a", "cast_member", "actor_2"),
        triple("film_b", "cast_member", "actor_3"),
        triple("film_a", "directed_by", "director_x"),
        triple("film_p", "genre", "drama"),
        triple("film_p", "genre", "romance"),
        triple("film_q", "genre", "romance"),
        triple("actor_1", "won_award", "academy_award"),
    ]
}

pub fn toy_graph() -> KnowledgeGraph {
    toy_graph_with(toy_triples(), vec![])
}

pub fn toy_graph_with(triples: Vec<Triple>, attributes: Vec<AttributeFact>) -> KnowledgeGraph {
    KnowledgeGraph::from_parts(toy_schema(), toy_entities(), triples, attributes, vec![]).expect("toy graph")
}

/// A schema where acting and directing both point at `person`, so a cast
/// member can be followed back to the films they directed.
pub fn person_graph() -> KnowledgeGraph {
    let schema = Schema {
        entity_types: vec![ty("film", "movie"), ty("person", "people")],
        relations: vec![
            rel("cast_member", "cast member", "film", "person"),
            rel("directed_by", "director", "film", "person"),
        ],
        attributes: vec![],
    };
    let entities = vec![
        entity("cog_2002", "City of God (2002 film)", "film"),
        entity("cog_2011", "City of God (2011 film)", "film"),
        entity("ten_years_later", "City of God - 10 Years Later", "film"),
        entity("dead_girls_feast", "The Dead Girl's Feast", "film"),
        entity("lucifer", "Lucifer", "film"),
        entity("bro_daddy", "Bro Daddy", "film"),
        entity("matheus", "Matheus Nachtergaele", "person"),
        entity("prithviraj", "Prithviraj Sukumaran", "person"),
        entity("cavi", "Cavi Borges", "person"),
        entity("alice", "Alice Braga", "person"),
    ];
    let triples = vec![
        triple("cog_2002", "cast_member", "matheus"),
        triple("cog_2002", "cast_member", "alice"),
        triple("cog_2011", "cast_member", "prithviraj"),
        triple("ten_years_later", "directed_by", "cavi"),
        triple("ten_years_later", "cast_member", "matheus"),
        triple("dead_girls_feast", "directed_by", "matheus"),
        triple("lucifer", "directed_by", "prithviraj"),
        triple("bro_daddy", "directed_by", "prithviraj"),
    ];
    let ambiguity = vec![AmbiguousName {
        surface: "City of God".into(),
        entities: vec!["cog_2002".into(), "cog_2011".into()],
    }];
    KnowledgeGraph::from_parts(schema, entities, triples, vec![], ambiguity).expect("person graph")
}

pub fn atomic(seed: Slot, relation: &str, direction: Direction) -> Op {
    Op::Atomic {
        seed,
        relation: relation.into(),
        direction,
    }
}

pub fn join(input: usize, relation: &str, direction: Direction) -> Op {
    Op::Join {
        input,
        relation: relation.into(),
        direction,
    }
}

pub fn filter(input: usize, predicate: Predicate) -> Op {
    Op::Filter { input, predicate }
}

pub fn has(relation: &str, direction: Direction, target: Option<Slot>) -> Predicate {
    Predicate::HasRelation {
        relation: relation.into(),
        direction,
        target,
    }
}

pub fn plan(ops: Vec<Op>, goal: &str) -> Plan {
    Plan::from_ops(ops, goal).expect("well-formed plan")
}

use Direction::{Forward, Reverse};

/// Directors who worked with Saoirse Ronan on at least two films.
pub fn table1_row1() -> Plan {
    plan(
        vec![
            atomic(Slot::entity("saoirse_ronan"), "cast_member", Reverse),
            join(1, "directed_by", Forward),
            Op::GroupBy { input: 2 },
            filter(3, Predicate::CountAtLeast { k: 2 }),
        ],
        "director",
    )
}

/// Actors in both a Scorsese film and a Tarantino film.
pub fn table1_row2() -> Plan {
    plan(
        vec![
            atomic(Slot::entity("martin_scorsese"), "directed_by", Reverse),
            join(1, "cast_member", Forward),
            atomic(Slot::entity("quentin_tarantino"), "directed_by", Reverse),
            join(3, "cast_member", Forward),
            Op::Intersection { left: 2, right: 4 },
        ],
        "actor",
    )
}

/// Films directed by a cast member of "City of God" (person schema).
pub fn table1_row3() -> Plan {
    plan(
        vec![
            atomic(Slot::ambiguous("City of God", "film"), "cast_member", Forward),
            join(1, "directed_by", Reverse),
        ],
        "film",
    )
}

/// Genres shared by "Americano" and Sleepless in Seattle.
pub fn table1_row4() -> Plan {
    plan(
        vec![
            atomic(Slot::ambiguous("Americano", "film"), "genre", Forward),
            atomic(Slot::entity("sleepless_in_seattle"), "genre", Forward),
            Op::Intersection { left: 1, right: 2 },
        ],
        "genre",
    )
}

/// Cast of "Heat", kept to those who appear in some film (all of them).
pub fn heat_plan() -> Plan {
    plan(
        vec![
            atomic(Slot::ambiguous("Heat", "film"), "cast_member", Forward),
            filter(1, has("cast_member", Reverse, None)),
        ],
        "actor",
    )
}

pub fn ids<'a>(items: impl IntoIterator<Item = &'a str>) -> std::collections::BTreeSet<String> {
    items.into_iter().map(str::to_string).collect()
}
