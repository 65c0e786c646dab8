//! File ingestion for the graph: `schema.json` plus JSONL tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::model::{AmbiguousName, AttributeDef, AttributeFact, Entity, EntityType, Literal, RelationDef, Schema, Triple};
use super::{GraphError, KnowledgeGraph, Result, Sourced};
use crate::canonical;

/// Locations of the graph input files. Attributes and the ambiguity
/// registry are optional.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphPaths {
    pub schema: PathBuf,
    pub entities: PathBuf,
    pub triples: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguity: Option<PathBuf>,
}

impl GraphPaths {
    /// The conventional file names inside one directory.
    pub fn in_dir(dir: &Path) -> Self {
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        GraphPaths {
            schema: dir.join("schema.json"),
            entities: dir.join("entities.jsonl"),
            triples: dir.join("triples.jsonl"),
            attributes: opt("attributes.jsonl"),
            ambiguity: opt("ambiguity.jsonl"),
        }
    }
}

#[derive(Deserialize)]
struct SchemaFile {
    entity_types: Vec<Extra<EntityType>>,
    relations: Vec<Extra<RelationDef>>,
    #[serde(default)]
    attributes: Vec<Extra<AttributeDef>>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

/// A record plus whatever fields the format does not define.
#[derive(Deserialize)]
struct Extra<T> {
    #[serde(flatten)]
    item: T,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct EntityLine {
    id: String,
    label: String,
    #[serde(rename = "type")]
    entity_type: String,
    #[serde(default)]
    aliases: Vec<String>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct TripleLine {
    subject: String,
    relation: String,
    object: String,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct AttributeLine {
    subject: String,
    attribute: String,
    value: Literal,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct AmbiguityLine {
    surface: String,
    entities: Vec<String>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

trait HasExtra {
    fn extra(&self) -> &BTreeMap<String, Value>;
}

macro_rules! has_extra {
    ($($t:ty),*) => {$(
        impl HasExtra for $t {
            fn extra(&self) -> &BTreeMap<String, Value> { &self.extra }
        }
    )*};
}
has_extra!(EntityLine, TripleLine, AttributeLine, AmbiguityLine);

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn warn_extra(origin: &str, extra: &BTreeMap<String, Value>) {
    if !extra.is_empty() {
        let keys: Vec<&str> = extra.keys().map(String::as_str).collect();
        log::warn!("{origin}: ignoring unknown fields {keys:?}");
    }
}

fn read_jsonl<T: DeserializeOwned + HasExtra>(path: &Path) -> Result<Vec<Sourced<T>>> {
    let text = read(path)?;
    let name = file_name(path);
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let origin = format!("{name}:{}", i + 1);
        let item: T = serde_json::from_str(line).map_err(|e| GraphError::Parse {
            origin: origin.clone(),
            message: e.to_string(),
        })?;
        warn_extra(&origin, item.extra());
        out.push(Sourced { origin, item });
    }
    Ok(out)
}

fn read_schema(path: &Path) -> Result<Schema> {
    let text = read(path)?;
    let name = file_name(path);
    let file: SchemaFile = serde_json::from_str(&text).map_err(|e| GraphError::Parse {
        origin: format!("{name}:{}", e.line()),
        message: e.to_string(),
    })?;
    warn_extra(&name, &file.extra);
    fn unwrap<T>(name: &str, items: Vec<Extra<T>>) -> Vec<T> {
        items
            .into_iter()
            .map(|e| {
                warn_extra(name, &e.extra);
                e.item
            })
            .collect()
    }
    Ok(Schema {
        entity_types: unwrap(&name, file.entity_types),
        relations: unwrap(&name, file.relations),
        attributes: unwrap(&name, file.attributes),
    })
}

fn convert<A, B>(items: Vec<Sourced<A>>, f: impl Fn(A) -> B) -> Vec<Sourced<B>> {
    items
        .into_iter()
        .map(|s| Sourced {
            origin: s.origin,
            item: f(s.item),
        })
        .collect()
}

pub(super) fn load(paths: &GraphPaths) -> Result<KnowledgeGraph> {
    let schema = read_schema(&paths.schema)?;
    let entities = convert(read_jsonl::<EntityLine>(&paths.entities)?, |l: EntityLine| Entity {
        id: l.id,
        label: l.label,
        entity_type: l.entity_type,
        aliases: l.aliases,
    });
    let triples = convert(read_jsonl::<TripleLine>(&paths.triples)?, |l: TripleLine| Triple {
        subject: l.subject,
        relation: l.relation,
        object: l.object,
    });
    let attributes = match &paths.attributes {
        Some(p) => convert(read_jsonl::<AttributeLine>(p)?, |l: AttributeLine| AttributeFact {
            subject: l.subject,
            attribute: l.attribute,
            value: l.value,
        }),
        None => Vec::new(),
    };
    let ambiguity = match &paths.ambiguity {
        Some(p) => convert(read_jsonl::<AmbiguityLine>(p)?, |l: AmbiguityLine| AmbiguousName {
            surface: l.surface,
            entities: l.entities,
        }),
        None => Vec::new(),
    };
    KnowledgeGraph::build(schema, entities, triples, attributes, ambiguity)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn jsonl<'a, T: Serialize + 'a>(items: impl IntoIterator<Item = &'a T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&canonical::to_string(item));
        out.push('\n');
    }
    out
}

pub(super) fn write(graph: &KnowledgeGraph, dir: &Path) -> Result<GraphPaths> {
    fs::create_dir_all(dir).map_err(|source| GraphError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let paths = GraphPaths {
        schema: dir.join("schema.json"),
        entities: dir.join("entities.jsonl"),
        triples: dir.join("triples.jsonl"),
        attributes: Some(dir.join("attributes.jsonl")),
        ambiguity: Some(dir.join("ambiguity.jsonl")),
    };
    let mut schema_text = canonical::to_string(graph.schema());
    schema_text.push('\n');
    write_file(&paths.schema, &schema_text)?;
    write_file(&paths.entities, &jsonl(graph.entities()))?;

    let triples: Vec<Triple> = graph
        .triples()
        .iter()
        .map(|&(s, r, o)| Triple {
            subject: graph.entity(s).id.clone(),
            relation: graph.schema().relation_at(r).id.clone(),
            object: graph.entity(o).id.clone(),
        })
        .collect();
    write_file(&paths.triples, &jsonl(&triples))?;

    let facts: Vec<AttributeFact> = graph
        .attribute_facts()
        .map(|(e, a, v)| AttributeFact {
            subject: graph.entity(e).id.clone(),
            attribute: graph.schema().attribute_at(a).id.clone(),
            value: v.clone(),
        })
        .collect();
    write_file(paths.attributes.as_ref().unwrap(), &jsonl(&facts))?;
    write_file(
        paths.ambiguity.as_ref().unwrap(),
        &jsonl(graph.ambiguity().values()),
    )?;
    Ok(paths)
}
