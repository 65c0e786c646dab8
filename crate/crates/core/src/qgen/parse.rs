//! Line-anchored parsers for model responses.
//!
//! Responses must carry the labelled lines the prompts ask for. Anything
//! else is a [`MalformedResponse`]: a wrong question silently accepted
//! would poison the gold data, so there is no best-effort extraction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed response: {reason}")]
pub struct MalformedResponse {
    pub reason: String,
    pub raw: String,
}

impl MalformedResponse {
    fn new(reason: impl Into<String>, raw: &str) -> Self {
        MalformedResponse {
            reason: reason.into(),
            raw: raw.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationResult {
    pub analysis: String,
    pub question: String,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Invalid(String),
}

/// Response lines with code-fence lines removed and outer whitespace trimmed.
fn content_lines(raw: &str) -> Vec<&str> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.starts_with("```"))
        .collect()
}

/// If `line` starts with `label:` (case-insensitive, optionally wrapped in
/// `**`), return the text after the colon.
fn labelled<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let line = line.strip_prefix("**").unwrap_or(line);
    let head = line.get(..label.len())?;
    if !head.eq_ignore_ascii_case(label) {
        return None;
    }
    let rest = &line[label.len()..];
    let rest = rest.strip_prefix("**").unwrap_or(rest);
    let rest = rest.strip_prefix(':')?;
    Some(rest.strip_prefix("**").unwrap_or(rest).trim())
}

/// Parse an `Analysis:` / `Question:` response. The question is the rest
/// of its line, or the next non-empty line if that is blank.
pub fn parse_translation(raw: &str) -> Result<TranslationResult, MalformedResponse> {
    let lines = content_lines(raw);
    let a = lines
        .iter()
        .position(|l| labelled(l, "Analysis").is_some())
        .ok_or_else(|| MalformedResponse::new("no `Analysis:` line", raw))?;
    let q = lines
        .iter()
        .position(|l| labelled(l, "Question").is_some())
        .ok_or_else(|| MalformedResponse::new("no `Question:` line", raw))?;
    if q < a {
        return Err(MalformedResponse::new("`Question:` precedes `Analysis:`", raw));
    }
    let mut analysis = vec![labelled(lines[a], "Analysis").unwrap_or_default()];
    analysis.extend(lines[a + 1..q].iter().copied());
    let analysis = analysis.into_iter().filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ");

    let inline = labelled(lines[q], "Question").unwrap_or_default();
    let question = if inline.is_empty() {
        lines[q + 1..].iter().find(|l| !l.is_empty()).copied().unwrap_or_default()
    } else {
        inline
    };
    let question = question.trim_matches(|c| c == '"' || c == '`').trim();
    if question.is_empty() {
        return Err(MalformedResponse::new("empty question", raw));
    }
    if question.contains('{') || question.contains('}') {
        return Err(MalformedResponse::new("question contains template syntax", raw));
    }
    Ok(TranslationResult {
        analysis,
        question: question.to_string(),
        raw: raw.to_string(),
    })
}

/// Parse a `Classification:` verdict, on the same line or the next
/// non-empty one. Text before it is kept as the reason for `Invalid`.
pub fn parse_classification(raw: &str) -> Result<Verdict, MalformedResponse> {
    let lines = content_lines(raw);
    let at = lines
        .iter()
        .rposition(|l| labelled(l, "Classification").is_some())
        .ok_or_else(|| MalformedResponse::new("no `Classification:` line", raw))?;
    let inline = labelled(lines[at], "Classification").unwrap_or_default();
    let word = if inline.is_empty() {
        lines[at + 1..].iter().find(|l| !l.is_empty()).copied().unwrap_or_default()
    } else {
        inline
    };
    let word = word
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '*' | '[' | ']' | '.' | '`') || c.is_whitespace())
        .to_ascii_lowercase();
    match word.as_str() {
        "valid" => Ok(Verdict::Valid),
        "invalid" => {
            let reason = lines[..at]
                .iter()
                .map(|l| {
                    labelled(l, "Your analysis")
                        .or_else(|| labelled(l, "Analysis"))
                        .unwrap_or(l)
                })
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            Ok(Verdict::Invalid(if reason.is_empty() {
                "classified invalid".into()
            } else {
                reason
            }))
        }
        other => Err(MalformedResponse::new(format!("verdict `{other}` is neither valid nor invalid"), raw)),
    }
}

/// Parse an entity-selection JSON object and return the ids chosen for
/// `placeholder`, as a string or a list of strings.
pub fn parse_selection(raw: &str, placeholder: &str) -> Result<Vec<String>, MalformedResponse> {
    let body = content_lines(raw).join("\n");
    let value: serde_json::Value =
        serde_json::from_str(body.trim()).map_err(|e| MalformedResponse::new(format!("not JSON: {e}"), raw))?;
    let object = value
        .as_object()
        .ok_or_else(|| MalformedResponse::new("not a JSON object", raw))?;
    let key = placeholder.trim_matches(|c| c == '{' || c == '}');
    let entry = object
        .iter()
        .find(|(k, _)| k.trim_matches(|c| c == '{' || c == '}') == key)
        .map(|(_, v)| v)
        .ok_or_else(|| MalformedResponse::new(format!("no entry for `{key}`"), raw))?;
    match entry {
        serde_json::Value::String(s) => Ok(vec![s.clone()]),
        serde_json::Value::Array(items) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| MalformedResponse::new("non-string id", raw))
            })
            .collect(),
        _ => Err(MalformedResponse::new("id is not a string", raw)),
    }
}
