use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AttributeIx, GraphError, RelationIx, Result};

/// Traversal direction over a relation. Forward walks subject to object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "fwd")]
    Forward,
    #[serde(rename = "rev")]
    Reverse,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityType {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDef {
    pub id: String,
    pub label: String,
    pub source_type: String,
    pub target_type: String,
}

impl RelationDef {
    /// Type of the entities a traversal starts from.
    pub fn near_type(&self, direction: Direction) -> &str {
        match direction {
            Direction::Forward => &self.source_type,
            Direction::Reverse => &self.target_type,
        }
    }

    /// Type of the entities a traversal arrives at.
    pub fn far_type(&self, direction: Direction) -> &str {
        match direction {
            Direction::Forward => &self.target_type,
            Direction::Reverse => &self.source_type,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueKind {
    #[serde(rename = "integer")]
    Integer,
    #[serde(rename = "date-year")]
    DateYear,
    #[serde(rename = "string")]
    String,
}

impl ValueKind {
    pub fn accepts(self, value: &Literal) -> bool {
        matches!(
            (self, value),
            (ValueKind::Integer | ValueKind::DateYear, Literal::Int(_))
                | (ValueKind::String, Literal::Str(_))
        )
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Integer => "integer",
            ValueKind::DateYear => "date-year",
            ValueKind::String => "string",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub id: String,
    pub label: String,
    pub subject_type: String,
    pub value_kind: ValueKind,
}

/// A typed literal. Years are stored as integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Str(String),
}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Literal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Literal::Int(a), Literal::Int(b)) => a.cmp(b),
            (Literal::Str(a), Literal::Str(b)) => a.cmp(b),
            (Literal::Int(_), Literal::Str(_)) => Ordering::Less,
            (Literal::Str(_), Literal::Int(_)) => Ordering::Greater,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub entity_types: Vec<EntityType>,
    pub relations: Vec<RelationDef>,
    #[serde(default)]
    pub attributes: Vec<AttributeDef>,
}

impl Schema {
    /// Sort every table by id and check uniqueness and referential closure.
    pub fn validated(mut self) -> Result<Self> {
        self.entity_types.sort_by(|a, b| a.id.cmp(&b.id));
        self.relations.sort_by(|a, b| a.id.cmp(&b.id));
        self.attributes.sort_by(|a, b| a.id.cmp(&b.id));

        let err = |message: String| GraphError::SchemaViolation {
            origin: "schema".into(),
            message,
        };
        let dup = |kind: &'static str, id: &str| GraphError::DuplicateId {
            origin: "schema".into(),
            kind,
            id: id.to_string(),
        };

        let mut types = BTreeSet::new();
        for t in &self.entity_types {
            if t.id.is_empty() {
                return Err(err("entity type with empty id".into()));
            }
            if !types.insert(t.id.as_str()) {
                return Err(dup("entity type", &t.id));
            }
        }
        let mut seen = BTreeSet::new();
        for r in &self.relations {
            if r.id.is_empty() {
                return Err(err("relation with empty id".into()));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(dup("relation", &r.id));
            }
            for ty in [&r.source_type, &r.target_type] {
                if !types.contains(ty.as_str()) {
                    return Err(err(format!(
                        "relation `{}` references unknown type `{ty}`",
                        r.id
                    )));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for a in &self.attributes {
            if a.id.is_empty() {
                return Err(err("attribute with empty id".into()));
            }
            if !seen.insert(a.id.as_str()) {
                return Err(dup("attribute", &a.id));
            }
            if !types.contains(a.subject_type.as_str()) {
                return Err(err(format!(
                    "attribute `{}` references unknown type `{}`",
                    a.id, a.subject_type
                )));
            }
        }
        Ok(self)
    }

    pub fn entity_type(&self, id: &str) -> Option<&EntityType> {
        self.entity_types
            .binary_search_by(|t| t.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entity_types[i])
    }

    pub fn relation(&self, id: &str) -> Option<&RelationDef> {
        self.relation_ix(id).map(|ix| self.relation_at(ix))
    }

    pub fn relation_ix(&self, id: &str) -> Option<RelationIx> {
        self.relations
            .binary_search_by(|r| r.id.as_str().cmp(id))
            .ok()
            .map(|i| RelationIx(i as u32))
    }

    pub fn relation_at(&self, ix: RelationIx) -> &RelationDef {
        &self.relations[ix.0 as usize]
    }

    pub fn attribute(&self, id: &str) -> Option<&AttributeDef> {
        self.attribute_ix(id).map(|ix| self.attribute_at(ix))
    }

    pub fn attribute_ix(&self, id: &str) -> Option<AttributeIx> {
        self.attributes
            .binary_search_by(|a| a.id.as_str().cmp(id))
            .ok()
            .map(|i| AttributeIx(i as u32))
    }

    pub fn attribute_at(&self, ix: AttributeIx) -> &AttributeDef {
        &self.attributes[ix.0 as usize]
    }

    /// Relations usable from an entity of `type_id`, with the direction that
    /// makes `type_id` the near side.
    pub fn traversals_from<'a>(
        &'a self,
        type_id: &'a str,
    ) -> impl Iterator<Item = (&'a RelationDef, Direction)> + 'a {
        self.relations.iter().flat_map(move |r| {
            let fwd = (r.source_type == type_id).then_some((r, Direction::Forward));
            let rev = (r.target_type == type_id).then_some((r, Direction::Reverse));
            fwd.into_iter().chain(rev)
        })
    }

    pub fn attributes_of<'a>(&'a self, type_id: &'a str) -> impl Iterator<Item = &'a AttributeDef> + 'a {
        self.attributes.iter().filter(move |a| a.subject_type == type_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub label: String,
    #[serde(rename = "type")]
    pub entity_type: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeFact {
    pub subject: String,
    pub attribute: String,
    pub value: Literal,
}

/// A surface form shared by several distinct entities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguousName {
    pub surface: String,
    pub entities: Vec<String>,
}
