//! Typed in-memory knowledge graph.
//!
//! Holds the schema (entity types, relation signatures, attribute
//! definitions), the entity table, relation triples with forward and reverse
//! adjacency indexes, literal attribute facts, and the ambiguous-name
//! registry. A [`KnowledgeGraph`] is immutable once built; every entry point
//! that constructs one validates referential closure and type safety first.

mod io;
mod model;

pub use io::GraphPaths;
pub use model::{
    AmbiguousName, AttributeDef, AttributeFact, Direction, Entity, EntityType, Literal,
    RelationDef, Schema, Triple, ValueKind,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: parse error: {message}")]
    Parse { origin: String, message: String },
    #[error("{origin}: schema violation: {message}")]
    SchemaViolation { origin: String, message: String },
    #[error("{origin}: duplicate {kind} id `{id}`")]
    DuplicateId {
        origin: String,
        kind: &'static str,
        id: String,
    },
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown entity type `{0}`")]
    UnknownType(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown ambiguous surface `{0}`")]
    UnknownSurface(String),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Dense handle of an entity inside one graph. Handles follow the sorted
/// order of entity ids, so ordering handles orders ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityIx(pub u32);

/// Dense handle of a relation inside one schema (sorted by relation id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationIx(pub u32);

/// Dense handle of an attribute definition (sorted by attribute id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeIx(pub u32);

/// An item waiting to be validated, tagged with where it came from
/// (`triples.jsonl:12`, `triple[3]`, ...) for error messages.
#[derive(Debug, Clone)]
pub(crate) struct Sourced<T> {
    pub origin: String,
    pub item: T,
}

impl<T> Sourced<T> {
    fn indexed(kind: &str, items: Vec<T>) -> Vec<Sourced<T>> {
        items
            .into_iter()
            .enumerate()
            .map(|(i, item)| Sourced {
                origin: format!("{kind}[{i}]"),
                item,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    schema: Schema,
    entities: Vec<Entity>,
    entity_ix: HashMap<String, EntityIx>,
    by_type: BTreeMap<String, Vec<EntityIx>>,
    triples: Vec<(EntityIx, RelationIx, EntityIx)>,
    forward: HashMap<(EntityIx, RelationIx), Vec<EntityIx>>,
    reverse: HashMap<(EntityIx, RelationIx), Vec<EntityIx>>,
    attributes: BTreeMap<(EntityIx, AttributeIx), Vec<Literal>>,
    ambiguity: BTreeMap<String, AmbiguousName>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.entities == other.entities
            && self.triples == other.triples
            && self.attributes == other.attributes
            && self.ambiguity == other.ambiguity
    }
}

impl KnowledgeGraph {
    /// Build a graph from in-memory parts with the same validation as
    /// [`KnowledgeGraph::load`].
    pub fn from_parts(
        schema: Schema,
        entities: Vec<Entity>,
        triples: Vec<Triple>,
        attributes: Vec<AttributeFact>,
        ambiguity: Vec<AmbiguousName>,
    ) -> Result<Self> {
        Self::build(
            schema,
            Sourced::indexed("entity", entities),
            Sourced::indexed("triple", triples),
            Sourced::indexed("attribute", attributes),
            Sourced::indexed("ambiguity", ambiguity),
        )
    }

    /// Load and validate a graph from its JSON/JSONL files.
    pub fn load(paths: &GraphPaths) -> Result<Self> {
        io::load(paths)
    }

    /// Write the graph back as canonical files (sorted ids, sorted keys).
    pub fn write_to_dir(&self, dir: &std::path::Path) -> Result<GraphPaths> {
        io::write(self, dir)
    }

    pub(crate) fn build(
        schema: Schema,
        entities: Vec<Sourced<Entity>>,
        triples: Vec<Sourced<Triple>>,
        attributes: Vec<Sourced<AttributeFact>>,
        ambiguity: Vec<Sourced<AmbiguousName>>,
    ) -> Result<Self> {
        let schema = schema.validated()?;

        let mut entities = entities;
        entities.sort_by(|a, b| a.item.id.cmp(&b.item.id));
        for pair in entities.windows(2) {
            if pair[0].item.id == pair[1].item.id {
                return Err(GraphError::DuplicateId {
                    origin: pair[1].origin.clone(),
                    kind: "entity",
                    id: pair[1].item.id.clone(),
                });
            }
        }
        let mut entity_ix = HashMap::with_capacity(entities.len());
        let mut by_type: BTreeMap<String, Vec<EntityIx>> = schema
            .entity_types
            .iter()
            .map(|t| (t.id.clone(), Vec::new()))
            .collect();
        for (i, e) in entities.iter().enumerate() {
            if e.item.id.is_empty() {
                return Err(violation(&e.origin, "entity id is empty"));
            }
            let Some(bucket) = by_type.get_mut(&e.item.entity_type) else {
                return Err(violation(
                    &e.origin,
                    format!(
                        "entity `{}` has unknown type `{}`",
                        e.item.id, e.item.entity_type
                    ),
                ));
            };
            let ix = EntityIx(i as u32);
            bucket.push(ix);
            entity_ix.insert(e.item.id.clone(), ix);
        }
        let entities: Vec<Entity> = entities.into_iter().map(|e| e.item).collect();

        let mut resolved = Vec::with_capacity(triples.len());
        for t in &triples {
            let Triple {
                subject,
                relation,
                object,
            } = &t.item;
            let rel_ix = schema.relation_ix(relation).ok_or_else(|| {
                violation(&t.origin, format!("unknown relation `{relation}`"))
            })?;
            let rel = schema.relation_at(rel_ix);
            let s = *entity_ix
                .get(subject)
                .ok_or_else(|| violation(&t.origin, format!("dangling subject `{subject}`")))?;
            let o = *entity_ix
                .get(object)
                .ok_or_else(|| violation(&t.origin, format!("dangling object `{object}`")))?;
            let s_type = &entities[s.0 as usize].entity_type;
            let o_type = &entities[o.0 as usize].entity_type;
            if s_type != &rel.source_type || o_type != &rel.target_type {
                return Err(violation(
                    &t.origin,
                    format!(
                        "triple ({subject}, {relation}, {object}) has types ({s_type}, {o_type}) \
                         but `{relation}` expects ({}, {})",
                        rel.source_type, rel.target_type
                    ),
                ));
            }
            resolved.push((s, rel_ix, o));
        }
        resolved.sort_unstable();
        resolved.dedup();

        let mut forward: HashMap<(EntityIx, RelationIx), Vec<EntityIx>> = HashMap::new();
        let mut reverse: HashMap<(EntityIx, RelationIx), Vec<EntityIx>> = HashMap::new();
        for &(s, r, o) in &resolved {
            forward.entry((s, r)).or_default().push(o);
            reverse.entry((o, r)).or_default().push(s);
        }
        for list in reverse.values_mut() {
            list.sort_unstable();
        }

        let mut attr_map: BTreeMap<(EntityIx, AttributeIx), Vec<Literal>> = BTreeMap::new();
        for a in &attributes {
            let AttributeFact {
                subject,
                attribute,
                value,
            } = &a.item;
            let attr_ix = schema.attribute_ix(attribute).ok_or_else(|| {
                violation(&a.origin, format!("unknown attribute `{attribute}`"))
            })?;
            let def = schema.attribute_at(attr_ix);
            let s = *entity_ix
                .get(subject)
                .ok_or_else(|| violation(&a.origin, format!("dangling subject `{subject}`")))?;
            let s_type = &entities[s.0 as usize].entity_type;
            if s_type != &def.subject_type {
                return Err(violation(
                    &a.origin,
                    format!(
                        "attribute `{attribute}` expects subject type `{}`, `{subject}` is `{s_type}`",
                        def.subject_type
                    ),
                ));
            }
            if !def.value_kind.accepts(value) {
                return Err(violation(
                    &a.origin,
                    format!(
                        "attribute `{attribute}` expects a {} value, got {value}",
                        def.value_kind
                    ),
                ));
            }
            let values = attr_map.entry((s, attr_ix)).or_default();
            if !values.contains(value) {
                values.push(value.clone());
                values.sort();
            }
        }

        let mut registry = BTreeMap::new();
        for a in ambiguity {
            let name = a.item;
            if name.surface.trim().is_empty() {
                return Err(violation(&a.origin, "ambiguous surface is empty"));
            }
            let distinct: BTreeSet<&String> = name.entities.iter().collect();
            if distinct.len() < 2 || distinct.len() != name.entities.len() {
                return Err(violation(
                    &a.origin,
                    format!(
                        "surface `{}` needs at least two distinct entities",
                        name.surface
                    ),
                ));
            }
            if let Some(missing) = name.entities.iter().find(|id| !entity_ix.contains_key(*id)) {
                return Err(violation(
                    &a.origin,
                    format!("surface `{}` lists unknown entity `{missing}`", name.surface),
                ));
            }
            if registry.contains_key(&name.surface) {
                return Err(GraphError::DuplicateId {
                    origin: a.origin,
                    kind: "surface",
                    id: name.surface,
                });
            }
            registry.insert(name.surface.clone(), name);
        }

        Ok(KnowledgeGraph {
            schema,
            entities,
            entity_ix,
            by_type,
            triples: resolved,
            forward,
            reverse,
            attributes: attr_map,
            ambiguity: registry,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Entities sorted by id.
    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn attribute_fact_count(&self) -> usize {
        self.attributes.values().map(Vec::len).sum()
    }

    pub fn entity_ix(&self, id: &str) -> Option<EntityIx> {
        self.entity_ix.get(id).copied()
    }

    pub fn entity(&self, ix: EntityIx) -> &Entity {
        &self.entities[ix.0 as usize]
    }

    pub fn entity_by_id(&self, id: &str) -> Result<&Entity> {
        self.entity_ix(id)
            .map(|ix| self.entity(ix))
            .ok_or_else(|| GraphError::UnknownEntity(id.to_string()))
    }

    /// Triples as (subject, relation, object) handles, sorted.
    pub fn triples(&self) -> &[(EntityIx, RelationIx, EntityIx)] {
        &self.triples
    }

    /// Entities reachable from `entity` over `relation` in `direction`.
    pub fn neighbors(&self, entity: &str, relation: &str, direction: Direction) -> Result<Vec<&str>> {
        let e = self
            .entity_ix(entity)
            .ok_or_else(|| GraphError::UnknownEntity(entity.to_string()))?;
        let r = self
            .schema
            .relation_ix(relation)
            .ok_or_else(|| GraphError::UnknownRelation(relation.to_string()))?;
        Ok(self
            .neighbors_ix(e, r, direction)
            .iter()
            .map(|&n| self.entity(n).id.as_str())
            .collect())
    }

    /// Index-level neighbor lookup; the slice is sorted.
    pub fn neighbors_ix(&self, entity: EntityIx, relation: RelationIx, direction: Direction) -> &[EntityIx] {
        let index = match direction {
            Direction::Forward => &self.forward,
            Direction::Reverse => &self.reverse,
        };
        index
            .get(&(entity, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Ids of entities with the given type, sorted by id.
    pub fn entities_of_type(&self, type_id: &str) -> Result<Vec<&str>> {
        Ok(self
            .entities_of_type_ix(type_id)?
            .iter()
            .map(|&ix| self.entity(ix).id.as_str())
            .collect())
    }

    pub fn entities_of_type_ix(&self, type_id: &str) -> Result<&[EntityIx]> {
        self.by_type
            .get(type_id)
            .map(Vec::as_slice)
            .ok_or_else(|| GraphError::UnknownType(type_id.to_string()))
    }

    /// Literal values recorded for `entity` under `attribute` (sorted).
    pub fn attribute_values(&self, entity: EntityIx, attribute: AttributeIx) -> &[Literal] {
        self.attributes
            .get(&(entity, attribute))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// All distinct values observed for an attribute, sorted.
    pub fn observed_values(&self, attribute: AttributeIx) -> Vec<&Literal> {
        let set: BTreeSet<&Literal> = self
            .attributes
            .iter()
            .filter(|((_, a), _)| *a == attribute)
            .flat_map(|(_, v)| v.iter())
            .collect();
        set.into_iter().collect()
    }

    pub(crate) fn attribute_facts(&self) -> impl Iterator<Item = (EntityIx, AttributeIx, &Literal)> {
        self.attributes
            .iter()
            .flat_map(|(&(e, a), vals)| vals.iter().map(move |v| (e, a, v)))
    }

    pub fn ambiguous(&self, surface: &str) -> Result<&AmbiguousName> {
        self.ambiguity
            .get(surface)
            .ok_or_else(|| GraphError::UnknownSurface(surface.to_string()))
    }

    /// The registry, keyed by surface form.
    pub fn ambiguity(&self) -> &BTreeMap<String, AmbiguousName> {
        &self.ambiguity
    }

    /// Registry entities of `surface` whose type is `slot_type`, sorted by id.
    pub fn ambiguous_candidates(&self, surface: &str, slot_type: &str) -> Result<Vec<EntityIx>> {
        let name = self.ambiguous(surface)?;
        let mut out: Vec<EntityIx> = name
            .entities
            .iter()
            .filter_map(|id| self.entity_ix(id))
            .filter(|&ix| self.entity(ix).entity_type == slot_type)
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Surfaces with at least `min` registry entities of `slot_type`.
    pub fn surfaces_for_type(&self, slot_type: &str, min: usize) -> Vec<&str> {
        self.ambiguity
            .values()
            .filter(|name| {
                name.entities
                    .iter()
                    .filter_map(|id| self.entity_ix(id))
                    .filter(|&ix| self.entity(ix).entity_type == slot_type)
                    .count()
                    >= min
            })
            .map(|name| name.surface.as_str())
            .collect()
    }
}

fn violation(origin: &str, message: impl Into<String>) -> GraphError {
    GraphError::SchemaViolation {
        origin: origin.to_string(),
        message: message.into(),
    }
}
