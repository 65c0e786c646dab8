use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::branch::{BranchedAnswer, BranchedExecution};
use crate::graph::KnowledgeGraph;
use crate::plan::Plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionSource {
    /// Not translated yet.
    None,
    Llm,
    Template,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VetStatus {
    Pending,
    Valid,
    Invalid,
    /// The verdict could not be obtained; kept with this flag.
    Unvetted,
    /// Vetting was not attempted (offline runs).
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub ordinal: u64,
    pub selector: String,
    pub question_source: QuestionSource,
    pub plan_vetting: VetStatus,
    pub qa_vetting: VetStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordStats {
    pub n_steps: usize,
    pub answer_size_total: usize,
    pub answer_size_per_branch: f64,
    pub n_branches: usize,
    /// Distinct entities materialized by any step, counted per branch and
    /// summed over branches.
    pub entities_involved: usize,
    pub question_words: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerEntity {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QARecord {
    pub id: String,
    pub question: String,
    pub plan: Plan,
    pub rendered_plan: Vec<String>,
    pub answers: BranchedAnswer,
    /// Label and aliases of every answer entity, for display and scoring.
    pub answer_entities: BTreeMap<String, AnswerEntity>,
    pub domain: String,
    pub stats: RecordStats,
    pub provenance: Provenance,
}

impl QARecord {
    pub fn is_ambiguous(&self) -> bool {
        self.answers.ambiguous
    }

    /// Set the question text and refresh the word count.
    pub fn set_question(&mut self, question: String) {
        self.stats.question_words = word_count(&question);
        self.question = question;
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

impl RecordStats {
    pub fn from_execution(plan: &Plan, execution: &BranchedExecution, question: &str) -> Self {
        let answers = &execution.answer;
        let n_branches = answers.n_branches();
        let total = answers.total_size();
        RecordStats {
            n_steps: plan.len(),
            answer_size_total: total,
            answer_size_per_branch: total as f64 / n_branches.max(1) as f64,
            n_branches,
            entities_involved: execution.traces.iter().map(|t| t.execution.involved().len()).sum(),
            question_words: word_count(question),
        }
    }
}

/// Assemble an untranslated record from an executed plan.
pub fn build_record(
    id: String,
    plan: Plan,
    rendered_plan: Vec<String>,
    execution: &BranchedExecution,
    graph: &KnowledgeGraph,
    provenance: Provenance,
) -> QARecord {
    let ids: BTreeSet<&String> = execution.answer.branches.values().flatten().collect();
    let answer_entities = ids
        .into_iter()
        .filter_map(|id| graph.entity_by_id(id).ok())
        .map(|e| {
            (
                e.id.clone(),
                AnswerEntity {
                    label: e.label.clone(),
                    aliases: e.aliases.clone(),
                },
            )
        })
        .collect();
    let domain = graph
        .schema()
        .entity_type(plan.goal_type())
        .map(|t| t.domain.clone())
        .unwrap_or_default();
    let stats = RecordStats::from_execution(&plan, execution, "");
    QARecord {
        id,
        question: String::new(),
        plan,
        rendered_plan,
        answers: execution.answer.clone(),
        answer_entities,
        domain,
        stats,
        provenance,
    }
}
