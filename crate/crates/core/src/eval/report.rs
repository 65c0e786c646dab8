use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::errors::{ErrorFlags, FlagState};
use super::score::QuestionScore;
use super::EvalError;

pub const AMBIGUOUS: &str = "ambiguous";
pub const NON_AMBIGUOUS: &str = "non_ambiguous";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub count: usize,
    pub precision: f64,
    pub recall: f64,
    pub exact_match: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Only subsets with at least one question appear.
    pub subsets: BTreeMap<String, SubsetReport>,
    pub overall: SubsetReport,
}

fn mean_of(scores: &[&QuestionScore]) -> SubsetReport {
    let n = scores.len() as f64;
    SubsetReport {
        count: scores.len(),
        precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
        exact_match: scores.iter().map(|s| s.em()).sum::<f64>() / n,
    }
}

/// Arithmetic means of P, R and EM per subset and overall. `scores` pairs
/// each question's ambiguity with its score; order does not matter beyond
/// floating-point summation, so callers pass them sorted by id.
pub fn aggregate(scores: &[(bool, &QuestionScore)]) -> Result<Aggregate, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut subsets = BTreeMap::new();
    for (ambiguous, name) in [(false, NON_AMBIGUOUS), (true, AMBIGUOUS)] {
        let part: Vec<&QuestionScore> = scores.iter().filter(|(a, _)| *a == ambiguous).map(|(_, s)| *s).collect();
        if !part.is_empty() {
            subsets.insert(name.to_string(), mean_of(&part));
        }
    }
    let all: Vec<&QuestionScore> = scores.iter().map(|(_, s)| *s).collect();
    Ok(Aggregate {
        subsets,
        overall: mean_of(&all),
    })
}

/// Counts over questions with exact match 0. One question may raise
/// several flags, so the counts can sum above `failed`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub failed: usize,
    pub incomplete_information_extraction: usize,
    pub incorrect_intermediate_reasoning: usize,
    pub wrong_tool_call: usize,
    /// Failed questions with at least one undecidable flag.
    pub undetermined: usize,
}

impl ErrorBreakdown {
    pub fn add(&mut self, flags: &ErrorFlags) {
        self.failed += 1;
        let states = [
            (flags.incomplete_information_extraction, &mut self.incomplete_information_extraction),
            (flags.incorrect_intermediate_reasoning, &mut self.incorrect_intermediate_reasoning),
            (flags.wrong_tool_call, &mut self.wrong_tool_call),
        ];
        let mut unknown = false;
        for (state, count) in states {
            match state {
                FlagState::Yes => *count += 1,
                FlagState::Unknown => unknown = true,
                FlagState::No => {}
            }
        }
        if unknown {
            self.undetermined += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub id: String,
    pub ambiguous: bool,
    pub score: QuestionScore,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorFlags>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub aggregate: Aggregate,
    pub errors: ErrorBreakdown,
    /// Gold questions without a prediction; scored as empty answers.
    pub missing_predictions: Vec<String>,
    /// Predictions whose id matches no gold question; ignored.
    pub unknown_predictions: Vec<String>,
    pub questions: Vec<QuestionResult>,
}

/// Aligned text table of the aggregate and the error breakdown.
pub fn render_report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16}{:>7}{:>8}{:>8}{:>8}", "subset", "count", "P", "R", "EM");
    let mut row = |name: &str, s: &SubsetReport| {
        let _ = writeln!(
            out,
            "{name:<16}{:>7}{:>8.3}{:>8.3}{:>8.3}",
            s.count, s.precision, s.recall, s.exact_match
        );
    };
    for (name, s) in &report.aggregate.subsets {
        row(name, s);
    }
    row("overall", &report.aggregate.overall);
    let e = &report.errors;
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<36}{:>7}", "questions with EM = 0", e.failed);
    for (name, n) in [
        ("incomplete information extraction", e.incomplete_information_extraction),
        ("incorrect intermediate reasoning", e.incorrect_intermediate_reasoning),
        ("wrong tool call", e.wrong_tool_call),
        ("undetermined (no transcript)", e.undetermined),
    ] {
        let share = if e.failed == 0 { 0.0 } else { n as f64 / e.failed as f64 };
        let _ = writeln!(out, "  {name:<34}{n:>7}{share:>8.3}");
    }
    out
}
