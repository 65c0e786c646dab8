//! Scoring predictions against branched gold answers.
//!
//! Answers are compared as sets of normalized labels. Predicted branches
//! are first aligned to gold branches, then precision and recall are pooled
//! over all aligned branches of a question.

mod align;
mod errors;
mod normalize;
mod report;
mod score;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use align::{align_branches, AlignStage, Alignment, BranchMatcher, MatcherError};
pub use errors::{classify_errors, ErrorFlags, FlagState};
pub use normalize::{normalize_answer, normalize_label, AliasTable};
pub use report::{
    aggregate, render_report_table, Aggregate, ErrorBreakdown, EvalReport, QuestionResult, SubsetReport, AMBIGUOUS,
    NON_AMBIGUOUS,
};
pub use score::{score_question, BranchScore, GoldAnswer, Pooling, Prediction, QuestionScore, ScoreOptions, ToolEvent};

use crate::par::WorkerPool;
use crate::synth::QARecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("more than one prediction for question `{0}`")]
    DuplicatePrediction(String),
}

/// Align, score and classify one question.
pub fn evaluate_question(
    prediction: &Prediction,
    gold: &GoldAnswer,
    aliases: &AliasTable,
    matcher: Option<&BranchMatcher<'_>>,
    options: ScoreOptions,
) -> QuestionResult {
    let alignment = align_branches(&prediction.labels(), &gold.labels(), &gold.question, matcher);
    let score = score_question(&prediction.normalized(aliases), gold, &alignment, options);
    let errors = (!score.exact_match).then(|| classify_errors(prediction, gold, &score, aliases));
    QuestionResult {
        id: gold.id.clone(),
        ambiguous: gold.ambiguous,
        score,
        errors,
    }
}

/// Score `predictions` against `records`. Questions are processed in id
/// order; a question without a prediction scores zero.
pub fn evaluate_dataset(
    records: &[QARecord],
    predictions: &[Prediction],
    aliases: &AliasTable,
    matcher: Option<&BranchMatcher<'_>>,
    options: ScoreOptions,
    pool: &WorkerPool,
) -> Result<EvalReport, EvalError> {
    if records.is_empty() || predictions.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut by_id: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in predictions {
        if by_id.insert(&p.id, p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.id.clone()));
        }
    }
    let mut sorted: Vec<&QARecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let gold_ids: BTreeSet<&str> = sorted.iter().map(|r| r.id.as_str()).collect();

    let mut missing = Vec::new();
    let jobs: Vec<(GoldAnswer, Prediction)> = sorted
        .iter()
        .map(|r| {
            let gold = GoldAnswer::from_record(r, aliases);
            let prediction = match by_id.get(r.id.as_str()) {
                Some(p) => (*p).clone(),
                None => {
                    missing.push(r.id.clone());
                    Prediction {
                        id: r.id.clone(),
                        reasoning: String::new(),
                        answers: BTreeMap::new(),
                        transcript: None,
                    }
                }
            };
            (gold, prediction)
        })
        .collect();
    let questions = pool.map(&jobs, |(gold, prediction)| {
        evaluate_question(prediction, gold, aliases, matcher, options)
    });

    let pairs: Vec<(bool, &QuestionScore)> = questions.iter().map(|q| (q.ambiguous, &q.score)).collect();
    let aggregate = aggregate(&pairs)?;
    let mut errors = ErrorBreakdown::default();
    for flags in questions.iter().filter_map(|q| q.errors.as_ref()) {
        errors.add(flags);
    }
    let unknown_predictions = by_id
        .keys()
        .filter(|id| !gold_ids.contains(*id))
        .map(|id| id.to_string())
        .collect();
    Ok(EvalReport {
        aggregate,
        errors,
        missing_predictions: missing,
        unknown_predictions,
        questions,
    })
}
