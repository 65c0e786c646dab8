use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::align::Alignment;
use super::normalize::AliasTable;
use crate::synth::QARecord;

/// One retrieval or tool call made while answering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolEvent {
    #[serde(default)]
    pub tool: String,
    #[serde(default)]
    pub query: String,
    /// `ok` unless the call failed; `error`, `failed` and `malformed` count
    /// as failures.
    #[serde(default = "ok_status")]
    pub status: String,
    #[serde(default)]
    pub documents: Vec<String>,
}

fn ok_status() -> String {
    "ok".into()
}

impl ToolEvent {
    pub fn failed(&self) -> bool {
        matches!(
            self.status.to_ascii_lowercase().as_str(),
            "error" | "failed" | "failure" | "malformed"
        )
    }
}

/// A system's answer to one question: branch label to answer strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    #[serde(default)]
    pub reasoning: String,
    #[serde(default)]
    pub answers: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Vec<ToolEvent>>,
}

impl Prediction {
    /// The gold answers of `record`, labelled, as a perfect prediction.
    pub fn from_gold(record: &QARecord) -> Self {
        let answers = record
            .answers
            .branches
            .iter()
            .map(|(branch, ids)| {
                let labels = ids
                    .iter()
                    .map(|id| record.answer_entities.get(id).map_or_else(|| id.clone(), |e| e.label.clone()))
                    .collect();
                (branch.clone(), labels)
            })
            .collect();
        Prediction {
            id: record.id.clone(),
            reasoning: String::new(),
            answers,
            transcript: None,
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.answers.keys().cloned().collect()
    }

    /// Answer sets after normalization and alias resolution.
    pub fn normalized(&self, aliases: &AliasTable) -> BTreeMap<String, BTreeSet<String>> {
        self.answers
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|s| aliases.canonical(s)).collect()))
            .collect()
    }
}

/// Gold answers as normalized canonical labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldAnswer {
    pub id: String,
    pub question: String,
    pub ambiguous: bool,
    pub branches: BTreeMap<String, BTreeSet<String>>,
}

impl GoldAnswer {
    pub fn from_record(record: &QARecord, aliases: &AliasTable) -> Self {
        let branches = record
            .answers
            .branches
            .iter()
            .map(|(branch, ids)| {
                let set = ids
                    .iter()
                    .map(|id| {
                        let label = record.answer_entities.get(id).map_or(id.as_str(), |e| e.label.as_str());
                        aliases.canonical(label)
                    })
                    .collect();
                (branch.clone(), set)
            })
            .collect();
        GoldAnswer {
            id: record.id.clone(),
            question: record.question.clone(),
            ambiguous: record.is_ambiguous(),
            branches,
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.branches.keys().cloned().collect()
    }
}

/// How counts are pooled into one precision and recall per question.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Sum intersections, predicted and gold sizes over all branches.
    #[default]
    Micro,
    /// Average per-branch precision and recall.
    Macro,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub pooling: Pooling,
    /// Do not penalize predicted branches that align with no gold branch.
    pub ignore_spurious_branches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchScore {
    pub precision: f64,
    pub recall: f64,
    pub exact_match: bool,
    /// Predicted label aligned to this gold branch, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub precision: f64,
    pub recall: f64,
    pub exact_match: bool,
    /// Keyed by gold branch label.
    pub per_branch: BTreeMap<String, BranchScore>,
    pub alignment: Alignment,
    /// Predicted labels that matched no gold branch.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spurious: Vec<String>,
}

impl QuestionScore {
    pub fn em(&self) -> f64 {
        if self.exact_match {
            1.0
        } else {
            0.0
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and exact match of `predicted` (normalized answer
/// sets by predicted label) against `gold` under `alignment`.
pub fn score_question(
    predicted: &BTreeMap<String, BTreeSet<String>>,
    gold: &GoldAnswer,
    alignment: &Alignment,
    options: ScoreOptions,
) -> QuestionScore {
    let by_gold: BTreeMap<&str, &str> = alignment
        .pairs
        .iter()
        .filter(|(p, g)| predicted.contains_key(*p) && gold.branches.contains_key(*g))
        .map(|(p, g)| (g.as_str(), p.as_str()))
        .collect();
    let spurious: Vec<String> = predicted
        .keys()
        .filter(|p| !alignment.pairs.get(*p).is_some_and(|g| gold.branches.contains_key(g)))
        .cloned()
        .collect();
    let empty = BTreeSet::new();

    let (mut inter, mut pred_n, mut gold_n) = (0usize, 0usize, 0usize);
    let mut precisions = Vec::new();
    let mut per_branch = BTreeMap::new();
    for (label, gold_set) in &gold.branches {
        let predicted_label = by_gold.get(label.as_str()).map(|p| p.to_string());
        let pred_set = predicted_label.as_ref().map_or(&empty, |p| &predicted[p]);
        let i = pred_set.intersection(gold_set).count();
        inter += i;
        pred_n += pred_set.len();
        gold_n += gold_set.len();
        if predicted_label.is_some() {
            precisions.push(ratio(i, pred_set.len()));
        }
        per_branch.insert(
            label.clone(),
            BranchScore {
                precision: ratio(i, pred_set.len()),
                recall: ratio(i, gold_set.len()),
                exact_match: predicted_label.is_some() && pred_set == gold_set,
                predicted_label,
            },
        );
    }
    if !options.ignore_spurious_branches {
        for p in &spurious {
            pred_n += predicted[p].len();
            precisions.push(0.0);
        }
    }

    let (precision, recall) = match options.pooling {
        Pooling::Micro => (ratio(inter, pred_n), ratio(inter, gold_n)),
        Pooling::Macro => {
            let mean = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
            let recalls: Vec<f64> = per_branch.values().map(|b| b.recall).collect();
            (mean(&precisions), mean(&recalls))
        }
    };
    let exact_match = per_branch.values().all(|b| b.exact_match)
        && (spurious.is_empty() || options.ignore_spurious_branches)
        && !per_branch.is_empty();
    QuestionScore {
        precision,
        recall,
        exact_match,
        per_branch,
        alignment: alignment.clone(),
        spurious,
    }
}
