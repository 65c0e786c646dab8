use serde::{Deserialize, Serialize};

use super::client::ChatClient;
use super::parse::Verdict;
use super::prompts::{format_answers, PromptKit};
use super::translate::{template_translate, translate};
use super::vet::{vet_plan, vet_qa, VetError};
use crate::graph::KnowledgeGraph;
use crate::par::WorkerPool;
use crate::synth::{QARecord, QuestionSource, VetStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TranslatePolicy {
    /// Template questions only; no client calls, vetting skipped.
    pub offline: bool,
    /// Drop records whose vetting is Invalid or could not be obtained,
    /// instead of keeping them with a flag.
    pub strict: bool,
    /// Parse retries for the translation prompt.
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dropped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct TranslateReport {
    /// Surviving records, in input order.
    pub records: Vec<QARecord>,
    pub dropped: Vec<Dropped>,
}

impl TranslateReport {
    /// Records kept despite a failed or negative check.
    pub fn flagged(&self) -> usize {
        self.records.iter().filter(|r| !r.provenance.flags.is_empty()).count()
    }
}

enum Outcome {
    Keep(Box<QARecord>),
    Drop(Dropped),
}

/// Translate and vet every record. Each record is handled independently on
/// `pool`, and results are merged back in input order.
pub fn translate_dataset(
    records: Vec<QARecord>,
    graph: &KnowledgeGraph,
    client: &dyn ChatClient,
    kit: &PromptKit,
    policy: TranslatePolicy,
    pool: &WorkerPool,
) -> TranslateReport {
    let outcomes = pool.map(&records, |r| process(r.clone(), graph, client, kit, policy));
    let mut report = TranslateReport {
        records: Vec::with_capacity(records.len()),
        dropped: Vec::new(),
    };
    for outcome in outcomes {
        match outcome {
            Outcome::Keep(r) => report.records.push(*r),
            Outcome::Drop(d) => {
                log::info!("dropped {}: {}", d.id, d.reason);
                report.dropped.push(d);
            }
        }
    }
    report
}

/// Turn a vetting result into a status, a flag to add, or a drop reason.
fn judge(
    stage: &str,
    result: Result<Verdict, VetError>,
    strict: bool,
) -> Result<(VetStatus, Option<String>), String> {
    match result {
        Ok(Verdict::Valid) => Ok((VetStatus::Valid, None)),
        Ok(Verdict::Invalid(reason)) if strict => Err(format!("{stage} invalid: {reason}")),
        Ok(Verdict::Invalid(reason)) => {
            log::info!("{stage} judged invalid, kept with flag: {reason}");
            Ok((VetStatus::Invalid, Some(format!("{stage}_invalid"))))
        }
        Err(e) if strict => Err(format!("{stage} unvetted: {e}")),
        Err(e) => {
            log::warn!("{stage} vetting failed, kept with flag: {e}");
            Ok((VetStatus::Unvetted, Some(format!("{stage}_unvetted"))))
        }
    }
}

fn process(
    mut record: QARecord,
    graph: &KnowledgeGraph,
    client: &dyn ChatClient,
    kit: &PromptKit,
    policy: TranslatePolicy,
) -> Outcome {
    if policy.offline {
        let q = template_translate(&record, graph);
        record.provenance.question_source = QuestionSource::Template;
        record.provenance.plan_vetting = VetStatus::Skipped;
        record.provenance.qa_vetting = VetStatus::Skipped;
        record.set_question(q);
        return Outcome::Keep(Box::new(record));
    }

    let id = record.id.clone();
    let drop = |reason: String| Outcome::Drop(Dropped { id: id.clone(), reason });

    let plan_verdict = vet_plan(&record.rendered_plan, client, kit, Some(&id));
    match judge("plan", plan_verdict, policy.strict) {
        Ok((status, flag)) => {
            record.provenance.plan_vetting = status;
            record.provenance.flags.extend(flag);
        }
        Err(reason) => return drop(reason),
    }

    let outcome = translate(&record, graph, client, kit, policy.retries);
    record.provenance.question_source = outcome.source;
    if outcome.source == QuestionSource::Template {
        record.provenance.flags.push("translation_fallback".into());
    }
    record.set_question(outcome.result.question);

    let answers = format_answers(&record);
    let qa_verdict = vet_qa(&record.question, &record.rendered_plan, &answers, client, kit, Some(&id));
    match judge("qa", qa_verdict, policy.strict) {
        Ok((status, flag)) => {
            record.provenance.qa_vetting = status;
            record.provenance.flags.extend(flag);
        }
        Err(reason) => return drop(reason),
    }
    Outcome::Keep(Box::new(record))
}
