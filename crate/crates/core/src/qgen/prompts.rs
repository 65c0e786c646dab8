//! Prompt templates shipped under `assets/prompts/`.

use std::path::Path;

use thiserror::Error;

use crate::synth::{BranchedAnswer, QARecord, DEFAULT_BRANCH};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("template `{template}` has no value for placeholder `{{{name}}}`")]
    MissingValue { template: String, name: String },
    #[error("cannot read prompt `{path}`: {message}")]
    Io { path: String, message: String },
}

/// A system prompt sent verbatim plus a user message with `{name}` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    /// Fill the user template in one left-to-right pass. Only `{ident}`
    /// spans are placeholders; substituted text is never rescanned.
    pub fn fill(&self, values: &[(&str, &str)]) -> Result<String, PromptError> {
        let src = self.user.as_str();
        let mut out = String::with_capacity(src.len() + 256);
        let mut rest = src;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let ident_len = after
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(after.len());
            if ident_len > 0 && after[ident_len..].starts_with('}') {
                let name = &after[..ident_len];
                let value = values
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| PromptError::MissingValue {
                        template: self.name.clone(),
                        name: name.to_string(),
                    })?;
                out.push_str(value);
                rest = &after[ident_len + 1..];
            } else {
                out.push('{');
                rest = after;
            }
        }
        out.push_str(rest);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptKit {
    pub translation: PromptTemplate,
    pub plan_feasibility: PromptTemplate,
    pub qa_feasibility: PromptTemplate,
    pub entity_selection: PromptTemplate,
    pub branch_match: PromptTemplate,
}

macro_rules! builtin {
    ($name:literal) => {
        PromptTemplate {
            name: $name.to_string(),
            system: include_str!(concat!("../../assets/prompts/", $name, ".system.txt")).to_string(),
            user: include_str!(concat!("../../assets/prompts/", $name, ".user.txt")).to_string(),
        }
    };
}

impl Default for PromptKit {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptKit {
    /// The templates compiled into the binary.
    pub fn builtin() -> Self {
        PromptKit {
            translation: builtin!("translation"),
            plan_feasibility: builtin!("plan_feasibility"),
            qa_feasibility: builtin!("qa_feasibility"),
            entity_selection: builtin!("entity_selection"),
            branch_match: builtin!("branch_match"),
        }
    }

    /// Built-in templates, overridden by any `<name>.system.txt` or
    /// `<name>.user.txt` present in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, PromptError> {
        let mut kit = Self::builtin();
        for t in [
            &mut kit.translation,
            &mut kit.plan_feasibility,
            &mut kit.qa_feasibility,
            &mut kit.entity_selection,
            &mut kit.branch_match,
        ] {
            for (suffix, slot) in [("system", &mut t.system), ("user", &mut t.user)] {
                let path = dir.join(format!("{}.{suffix}.txt", t.name));
                if path.exists() {
                    *slot = std::fs::read_to_string(&path).map_err(|e| PromptError::Io {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })?;
                }
            }
        }
        Ok(kit)
    }
}

/// `(3) Find ...` lines become `3. Find ...`, the numbering the prompts'
/// examples use.
pub fn format_plan(rendered: &[String]) -> String {
    rendered
        .iter()
        .map(|line| {
            line.strip_prefix('(')
                .and_then(|s| s.split_once(") "))
                .filter(|(n, _)| n.chars().all(|c| c.is_ascii_digit()))
                .map_or_else(|| line.clone(), |(n, text)| format!("{n}. {text}"))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Bulleted answer labels; ambiguous answers get one header per branch.
pub fn format_answers(record: &QARecord) -> String {
    format_branched(&record.answers, |id| {
        record
            .answer_entities
            .get(id)
            .map_or_else(|| id.to_string(), |e| e.label.clone())
    })
}

pub fn format_branched(answers: &BranchedAnswer, label: impl Fn(&str) -> String) -> String {
    let mut lines = Vec::new();
    for (branch, ids) in &answers.branches {
        let indent = if answers.ambiguous || branch != DEFAULT_BRANCH {
            lines.push(format!("{branch}:"));
            "  "
        } else {
            ""
        };
        let mut labels: Vec<String> = ids.iter().map(|id| label(id)).collect();
        labels.sort();
        lines.extend(labels.into_iter().map(|l| format!("{indent}- {l}")));
    }
    lines.join("\n")
}
