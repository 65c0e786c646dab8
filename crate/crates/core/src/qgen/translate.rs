use super::client::{ChatClient, ChatRequest, ClientError};
use super::parse::{parse_translation, TranslationResult};
use super::prompts::{format_answers, format_plan, PromptKit};
use crate::graph::KnowledgeGraph;
use crate::plan::{plural, render_clauses};
use crate::synth::{QARecord, QuestionSource};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationOutcome {
    pub result: TranslationResult,
    pub source: QuestionSource,
    /// Model calls made, including failed ones.
    pub attempts: u32,
    /// Last failure when the template fallback was used.
    pub failure: Option<String>,
}

/// Ask the model for a question, retrying unparsable responses up to
/// `retries` times, and fall back to [`template_translate`] when every
/// attempt fails. Offline and authentication errors skip the retries.
pub fn translate(
    record: &QARecord,
    graph: &KnowledgeGraph,
    client: &dyn ChatClient,
    kit: &PromptKit,
    retries: u32,
) -> TranslationOutcome {
    let plan = format_plan(&record.rendered_plan);
    let answers = format_answers(record);
    let mut attempts = 0;
    let failure = match kit.translation.fill(&[("plan", &plan), ("answers", &answers)]) {
        Err(e) => e.to_string(),
        Ok(user) => {
            let request = ChatRequest {
                purpose: "translation".into(),
                record_id: Some(record.id.clone()),
                system: kit.translation.system.clone(),
                user,
            };
            loop {
                attempts += 1;
                let failure = match client.complete(&request) {
                    Ok(raw) => match parse_translation(&raw) {
                        Ok(result) => {
                            return TranslationOutcome {
                                result,
                                source: QuestionSource::Llm,
                                attempts,
                                failure: None,
                            }
                        }
                        Err(e) => e.to_string(),
                    },
                    Err(e @ (ClientError::Offline | ClientError::Auth(_) | ClientError::MissingToken(_))) => {
                        break e.to_string();
                    }
                    Err(e) => e.to_string(),
                };
                log::debug!("translation of {} failed (attempt {attempts}): {failure}", record.id);
                if attempts > retries {
                    break failure;
                }
            }
        }
    };
    log::warn!("{}: using template question after {attempts} attempt(s): {failure}", record.id);
    TranslationOutcome {
        result: TranslationResult {
            analysis: String::new(),
            question: template_translate(record, graph),
            raw: String::new(),
        },
        source: QuestionSource::Template,
        attempts,
        failure: Some(failure),
    }
}

/// Deterministic question built from the plan's clauses:
/// `Which <plural goal type> satisfy: <clause>; <clause>?`.
pub fn template_translate(record: &QARecord, graph: &KnowledgeGraph) -> String {
    let goal = graph
        .schema()
        .entity_type(record.plan.goal_type())
        .map_or_else(|| record.plan.goal_type().to_string(), |t| t.label.clone());
    let clauses = render_clauses(&record.plan, graph).unwrap_or_else(|_| {
        record
            .rendered_plan
            .iter()
            .map(|l| l.trim_end_matches('.').to_string())
            .collect()
    });
    format!("Which {} satisfy: {}?", plural(&goal), clauses.join("; "))
}
