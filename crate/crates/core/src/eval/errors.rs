//! Three-way breakdown of why a question was missed.

use serde::{Deserialize, Serialize};

use super::normalize::{normalize_label, AliasTable};
use super::score::{GoldAnswer, Prediction, QuestionScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagState {
    Yes,
    No,
    /// Not decidable without a transcript.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorFlags {
    pub incomplete_information_extraction: FlagState,
    pub incorrect_intermediate_reasoning: FlagState,
    pub wrong_tool_call: FlagState,
}

impl ErrorFlags {
    pub const NONE: ErrorFlags = ErrorFlags {
        incomplete_information_extraction: FlagState::No,
        incorrect_intermediate_reasoning: FlagState::No,
        wrong_tool_call: FlagState::No,
    };

    /// Names of the flags set to `Yes`.
    pub fn raised(&self) -> Vec<&'static str> {
        [
            ("incomplete_information_extraction", self.incomplete_information_extraction),
            ("incorrect_intermediate_reasoning", self.incorrect_intermediate_reasoning),
            ("wrong_tool_call", self.wrong_tool_call),
        ]
        .into_iter()
        .filter(|(_, s)| *s == FlagState::Yes)
        .map(|(n, _)| n)
        .collect()
    }
}

fn yes_no(b: bool) -> FlagState {
    if b {
        FlagState::Yes
    } else {
        FlagState::No
    }
}

/// Flag the failure modes of a question with exact match 0. Correct
/// questions get no flags.
///
/// * incomplete extraction: a gold branch has no aligned prediction, or a
///   missed gold answer (under any alias) occurs in no retrieved document;
/// * incorrect reasoning: a missed gold answer occurs in some retrieved
///   document;
/// * wrong tool call: a tool event reports failure.
///
/// Without a transcript only the branch-coverage part of the first flag is
/// decidable; the rest are `Unknown`.
pub fn classify_errors(
    prediction: &Prediction,
    gold: &GoldAnswer,
    score: &QuestionScore,
    aliases: &AliasTable,
) -> ErrorFlags {
    if score.exact_match {
        return ErrorFlags::NONE;
    }
    let predicted = prediction.normalized(aliases);
    let uncovered = score.per_branch.values().any(|b| b.predicted_label.is_none());

    let Some(transcript) = &prediction.transcript else {
        return ErrorFlags {
            incomplete_information_extraction: if uncovered { FlagState::Yes } else { FlagState::Unknown },
            incorrect_intermediate_reasoning: FlagState::Unknown,
            wrong_tool_call: FlagState::Unknown,
        };
    };

    let documents: Vec<String> = transcript
        .iter()
        .flat_map(|e| e.documents.iter())
        .map(|d| normalize_label(d))
        .collect();
    let mut absent = false;
    let mut present = false;
    for (label, gold_set) in &gold.branches {
        let branch = &score.per_branch[label];
        let got = branch.predicted_label.as_ref().and_then(|p| predicted.get(p));
        for answer in gold_set {
            if got.is_some_and(|s| s.contains(answer)) {
                continue;
            }
            let seen = aliases
                .surfaces(answer)
                .iter()
                .any(|s| documents.iter().any(|d| contains_phrase(d, s)));
            if seen {
                present = true;
            } else {
                absent = true;
            }
        }
    }
    ErrorFlags {
        incomplete_information_extraction: yes_no(uncovered || absent),
        incorrect_intermediate_reasoning: yes_no(present),
        wrong_tool_call: yes_no(transcript.iter().any(|e| e.failed())),
    }
}

/// Whether `phrase` occurs in `text` delimited by non-alphanumerics, so
/// `heat` is not found inside `heath`.
fn contains_phrase(text: &str, phrase: &str) -> bool {
    if phrase.is_empty() {
        return false;
    }
    text.match_indices(phrase).any(|(i, m)| {
        let before = text[..i].chars().next_back();
        let after = text[i + m.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}
