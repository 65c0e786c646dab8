//! Matching predicted branch labels to gold branch labels.
//!
//! Stages run in order, each only over labels still unmatched:
//! exact normalized equality, then a unique textual overlap, then an
//! optional model-based matcher. Every stage keeps the mapping one-to-one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::normalize::normalize_label;
use crate::qgen::{ChatClient, ChatRequest, PromptKit};
use crate::synth::DEFAULT_BRANCH;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatcherError {
    #[error("branch matcher call failed: {0}")]
    Client(String),
    #[error("branch matcher response is not a JSON object of labels: {0}")]
    Malformed(String),
}

/// How one predicted label was aligned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignStage {
    SingleBranch,
    Exact,
    Substring,
    Matcher,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    /// Predicted label to gold label.
    pub pairs: BTreeMap<String, String>,
    pub stages: BTreeMap<String, AlignStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matcher_error: Option<String>,
}

impl Alignment {
    pub fn gold_for(&self, predicted: &str) -> Option<&str> {
        self.pairs.get(predicted).map(String::as_str)
    }

    fn link(&mut self, predicted: &str, gold: &str, stage: AlignStage) {
        self.pairs.insert(predicted.to_string(), gold.to_string());
        self.stages.insert(predicted.to_string(), stage);
    }

    fn open<'a>(&self, predicted: &'a [String], gold: &'a [String]) -> (Vec<&'a String>, Vec<&'a String>) {
        let taken: BTreeSet<&String> = self.pairs.values().collect();
        (
            predicted.iter().filter(|p| !self.pairs.contains_key(*p)).collect(),
            gold.iter().filter(|g| !taken.contains(g)).collect(),
        )
    }
}

/// The model-based third stage.
pub struct BranchMatcher<'a> {
    pub client: &'a dyn ChatClient,
    pub kit: &'a PromptKit,
}

/// Words too common to identify a branch on their own.
const STOPWORDS: &[&str] = &["the", "and", "for", "with", "from", "film", "movie"];

fn tokens(label: &str) -> BTreeSet<String> {
    label
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 3 && !STOPWORDS.contains(t))
        .map(str::to_string)
        .collect()
}

/// Keep only candidate pairs whose predicted and gold sides are both unique.
fn one_to_one<'a>(pairs: Vec<(&'a String, &'a String)>) -> Vec<(&'a String, &'a String)> {
    let mut gold_uses: BTreeMap<&String, usize> = BTreeMap::new();
    for (_, g) in &pairs {
        *gold_uses.entry(*g).or_default() += 1;
    }
    pairs.into_iter().filter(|(_, g)| gold_uses[g] == 1).collect()
}

/// The gold label `p` overlaps with, if exactly one does. Whole-label
/// containment is tried first, then words that occur in exactly one
/// open gold label.
fn overlap<'a>(p: &str, gold: &[(&'a String, String)]) -> Option<&'a String> {
    let contained: Vec<&String> = gold
        .iter()
        .filter(|(_, g)| !p.is_empty() && (g.contains(p) || p.contains(g.as_str())))
        .map(|(raw, _)| *raw)
        .collect();
    if contained.len() == 1 {
        return Some(contained[0]);
    }
    if contained.len() > 1 {
        return None;
    }
    let gold_tokens: Vec<BTreeSet<String>> = gold.iter().map(|(_, g)| tokens(g)).collect();
    let mut hits = BTreeSet::new();
    for t in tokens(p) {
        let owners: Vec<usize> = (0..gold.len()).filter(|&i| gold_tokens[i].contains(&t)).collect();
        if owners.len() == 1 {
            hits.insert(owners[0]);
        }
    }
    match hits.len() {
        1 => hits.first().map(|&i| gold[i].0),
        _ => None,
    }
}

/// Align predicted branch labels to gold branch labels. A single-branch
/// `default` gold answer accepts any lone predicted label. Predicted labels
/// left over stay unaligned.
pub fn align_branches(
    predicted: &[String],
    gold: &[String],
    question: &str,
    matcher: Option<&BranchMatcher<'_>>,
) -> Alignment {
    let mut alignment = Alignment::default();
    if gold.len() == 1 && gold[0] == DEFAULT_BRANCH && predicted.len() == 1 {
        alignment.link(&predicted[0], &gold[0], AlignStage::SingleBranch);
        return alignment;
    }

    let (open_p, open_g) = alignment.open(predicted, gold);
    let exact: Vec<(&String, &String)> = open_p
        .iter()
        .filter_map(|p| {
            let n = normalize_label(p);
            let hits: Vec<&&String> = open_g.iter().filter(|g| normalize_label(g) == n).collect();
            (hits.len() == 1).then(|| (*p, *hits[0]))
        })
        .collect();
    for (p, g) in one_to_one(exact) {
        alignment.link(p, g, AlignStage::Exact);
    }

    let (open_p, open_g) = alignment.open(predicted, gold);
    let normalized_gold: Vec<(&String, String)> = open_g.iter().map(|g| (*g, normalize_label(g))).collect();
    let fuzzy: Vec<(&String, &String)> = open_p
        .iter()
        .filter_map(|p| overlap(&normalize_label(p), &normalized_gold).map(|g| (*p, g)))
        .collect();
    for (p, g) in one_to_one(fuzzy) {
        alignment.link(p, g, AlignStage::Substring);
    }

    let (open_p, open_g) = alignment.open(predicted, gold);
    if let (Some(m), false, false) = (matcher, open_p.is_empty(), open_g.is_empty()) {
        let open_p: Vec<String> = open_p.into_iter().cloned().collect();
        let open_g: Vec<String> = open_g.into_iter().cloned().collect();
        match ask_matcher(m, question, &open_p, &open_g) {
            Ok(proposed) => {
                let valid: Vec<(&String, &String)> = proposed
                    .iter()
                    .filter_map(|(p, g)| Some((open_p.iter().find(|x| *x == p)?, open_g.iter().find(|x| *x == g)?)))
                    .collect();
                for (p, g) in one_to_one(valid) {
                    alignment.link(p, g, AlignStage::Matcher);
                }
            }
            Err(e) => {
                log::warn!("{e}; keeping exact and substring alignments only");
                alignment.matcher_error = Some(e.to_string());
            }
        }
    }
    alignment
}

fn bullets(labels: &[String]) -> String {
    labels.iter().map(|l| format!("- {l}")).collect::<Vec<_>>().join("\n")
}

fn ask_matcher(
    m: &BranchMatcher<'_>,
    question: &str,
    predicted: &[String],
    gold: &[String],
) -> Result<Vec<(String, String)>, MatcherError> {
    let template = &m.kit.branch_match;
    let user = template
        .fill(&[
            ("question", question),
            ("gold", &bullets(gold)),
            ("predicted", &bullets(predicted)),
        ])
        .map_err(|e| MatcherError::Client(e.to_string()))?;
    let request = ChatRequest {
        purpose: template.name.clone(),
        record_id: None,
        system: template.system.clone(),
        user,
    };
    let raw = m.client.complete(&request).map_err(|e| MatcherError::Client(e.to_string()))?;
    let body: String = raw
        .lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n");
    let value: serde_json::Value =
        serde_json::from_str(body.trim()).map_err(|e| MatcherError::Malformed(e.to_string()))?;
    let object = value
        .as_object()
        .ok_or_else(|| MatcherError::Malformed("not an object".into()))?;
    let mut out = Vec::new();
    for (p, g) in object {
        match g {
            serde_json::Value::String(g) => out.push((p.clone(), g.clone())),
            serde_json::Value::Null => {}
            other => return Err(MatcherError::Malformed(format!("value {other} for `{p}`"))),
        }
    }
    Ok(out)
}
