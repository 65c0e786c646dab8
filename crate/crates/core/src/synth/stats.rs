use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::QARecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no records to summarize")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub count: usize,
    pub avg_question_words: f64,
    pub avg_answer_size: f64,
    pub avg_steps: f64,
    pub avg_entities_involved: f64,
    /// Ambiguous subset only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_answer_per_branch: Option<f64>,
    /// Ambiguous subset only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_branches: Option<f64>,
}

/// `steps`, `answer_sizes` and `branch_counts` have one entry per record;
/// `operation_types` and `predicate_types` count every step and predicate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histograms {
    pub steps: BTreeMap<usize, u64>,
    pub answer_sizes: BTreeMap<usize, u64>,
    pub branch_counts: BTreeMap<usize, u64>,
    pub operation_types: BTreeMap<String, u64>,
    pub predicate_types: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub non_ambiguous: Option<SubsetStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguous: Option<SubsetStats>,
    pub histograms: Histograms,
}

fn mean(records: &[&QARecord], f: impl Fn(&QARecord) -> f64) -> f64 {
    records.iter().map(|r| f(r)).sum::<f64>() / records.len() as f64
}

fn subset(records: &[&QARecord], ambiguous: bool) -> Option<SubsetStats> {
    if records.is_empty() {
        return None;
    }
    Some(SubsetStats {
        count: records.len(),
        avg_question_words: mean(records, |r| r.stats.question_words as f64),
        avg_answer_size: mean(records, |r| r.stats.answer_size_total as f64),
        avg_steps: mean(records, |r| r.stats.n_steps as f64),
        avg_entities_involved: mean(records, |r| r.stats.entities_involved as f64),
        avg_answer_per_branch: ambiguous.then(|| mean(records, |r| r.stats.answer_size_per_branch)),
        avg_branches: ambiguous.then(|| mean(records, |r| r.stats.n_branches as f64)),
    })
}

pub fn compute_dataset_stats(records: &[QARecord]) -> Result<DatasetStats, StatsError> {
    if records.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let (amb, non): (Vec<&QARecord>, Vec<&QARecord>) = records.iter().partition(|r| r.is_ambiguous());
    let mut h = Histograms::default();
    for r in records {
        *h.steps.entry(r.stats.n_steps).or_default() += 1;
        *h.answer_sizes.entry(r.stats.answer_size_total).or_default() += 1;
        *h.branch_counts.entry(r.stats.n_branches).or_default() += 1;
        for kind in r.plan.op_kinds() {
            *h.operation_types.entry(kind.name().to_string()).or_default() += 1;
        }
        for p in r.plan.predicates() {
            *h.predicate_types.entry(p.kind().to_string()).or_default() += 1;
        }
    }
    Ok(DatasetStats {
        total: records.len(),
        non_ambiguous: subset(&non, false),
        ambiguous: subset(&amb, true),
        histograms: h,
    })
}

/// Plain-text summary laid out like the usual key-statistics table.
pub fn render_stats_table(stats: &DatasetStats) -> String {
    let mut out = String::new();
    let mut row = |label: &str, value: String| {
        let _ = writeln!(out, "{label:<36}{value:>10}");
    };
    if let Some(s) = &stats.non_ambiguous {
        row("Non-ambiguous questions:", s.count.to_string());
        row("  - Avg. # question words", format!("{:.1}", s.avg_question_words));
        row("  - Avg. # answer set size", format!("{:.1}", s.avg_answer_size));
        row("  - Avg. # execution steps", format!("{:.1}", s.avg_steps));
        row("  - Avg. # entities involved", format!("{:.1}", s.avg_entities_involved));
    }
    if let Some(s) = &stats.ambiguous {
        row("Ambiguous questions:", s.count.to_string());
        row("  - Avg. # question words", format!("{:.1}", s.avg_question_words));
        row("  - Avg. # answer set size", format!("{:.1}", s.avg_answer_size));
        row("  - Avg. # execution steps", format!("{:.1}", s.avg_steps));
        row(
            "  - Avg. # answer set per branch",
            format!("{:.1}", s.avg_answer_per_branch.unwrap_or(0.0)),
        );
        row("  - Avg. # entities involved", format!("{:.1}", s.avg_entities_involved));
        row(
            "  - Avg. # reasoning branches",
            format!("{:.1}", s.avg_branches.unwrap_or(0.0)),
        );
    }
    out
}
