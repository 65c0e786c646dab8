use std::collections::BTreeMap;

use unicode_normalization::UnicodeNormalization;

use crate::graph::KnowledgeGraph;
use crate::synth::QARecord;

/// NFKC, lowercase, trimmed, inner whitespace collapsed. Used as-is for
/// branch labels.
pub fn normalize_label(text: &str) -> String {
    let folded: String = text.nfkc().collect::<String>().to_lowercase();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// [`normalize_label`] plus removal of one trailing parenthetical, so
/// `Heat (1995 film)` and `heat` compare equal as answers.
pub fn normalize_answer(text: &str) -> String {
    let label = normalize_label(text);
    if let Some(stripped) = label.strip_suffix(')') {
        if let Some(open) = stripped.rfind('(') {
            let head = stripped[..open].trim_end();
            if !head.is_empty() {
                return head.to_string();
            }
        }
    }
    label
}

/// Maps normalized aliases (and entity ids) to the normalized canonical
/// label of their entity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    map: BTreeMap<String, String>,
}

impl AliasTable {
    /// Canonical labels take precedence over aliases and ids; among
    /// aliases, the first registration wins.
    fn add(&mut self, id: &str, label: &str, aliases: &[String]) {
        let canonical = normalize_answer(label);
        self.map.insert(canonical.clone(), canonical.clone());
        for alias in aliases.iter().map(|a| normalize_answer(a)).chain([normalize_label(id)]) {
            self.map.entry(alias).or_insert_with(|| canonical.clone());
        }
    }

    pub fn from_graph(graph: &KnowledgeGraph) -> Self {
        let mut table = AliasTable::default();
        for e in graph.entities() {
            table.add(&e.id, &e.label, &e.aliases);
        }
        table
    }

    /// Answer entities of `records`, in the order given.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a QARecord>) -> Self {
        let mut table = AliasTable::default();
        let records: Vec<&QARecord> = records.into_iter().collect();
        for r in &records {
            for (id, e) in &r.answer_entities {
                table.add(id, &e.label, &[]);
            }
        }
        for r in &records {
            for (id, e) in &r.answer_entities {
                table.add(id, &e.label, &e.aliases);
            }
        }
        table
    }

    pub fn insert(&mut self, alias: &str, canonical: &str) {
        self.map.insert(normalize_answer(alias), normalize_answer(canonical));
    }

    /// Normalized answer text, mapped to its canonical label if known.
    pub fn canonical(&self, text: &str) -> String {
        let n = normalize_answer(text);
        self.map.get(&n).cloned().unwrap_or(n)
    }

    /// Every normalized surface form that maps to `canonical`, itself included.
    pub fn surfaces(&self, canonical: &str) -> Vec<String> {
        let mut out = vec![canonical.to_string()];
        out.extend(
            self.map
                .iter()
                .filter(|(k, v)| v.as_str() == canonical && k.as_str() != canonical)
                .map(|(k, _)| k.clone()),
        );
        out
    }
}
