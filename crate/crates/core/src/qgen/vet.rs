use thiserror::Error;

use super::client::{ChatClient, ChatRequest, ClientError};
use super::parse::{parse_classification, MalformedResponse, Verdict};
use super::prompts::{format_plan, PromptError, PromptKit, PromptTemplate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VetError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Malformed(#[from] MalformedResponse),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

fn classify(
    template: &PromptTemplate,
    values: &[(&str, &str)],
    client: &dyn ChatClient,
    record_id: Option<&str>,
) -> Result<Verdict, VetError> {
    let request = ChatRequest {
        purpose: template.name.clone(),
        record_id: record_id.map(str::to_string),
        system: template.system.clone(),
        user: template.fill(values)?,
    };
    Ok(parse_classification(&client.complete(&request)?)?)
}

/// Judge whether a rendered plan is a sensible, executable information need.
pub fn vet_plan(
    rendering: &[String],
    client: &dyn ChatClient,
    kit: &PromptKit,
    record_id: Option<&str>,
) -> Result<Verdict, VetError> {
    let plan = format_plan(rendering);
    classify(&kit.plan_feasibility, &[("plan", &plan)], client, record_id)
}

/// Judge whether a question, its plan and its answers agree. `answers` is
/// the bulleted list produced by [`super::format_answers`].
pub fn vet_qa(
    question: &str,
    rendering: &[String],
    answers: &str,
    client: &dyn ChatClient,
    kit: &PromptKit,
    record_id: Option<&str>,
) -> Result<Verdict, VetError> {
    let plan = format_plan(rendering);
    classify(
        &kit.qa_feasibility,
        &[("question", question), ("plan", &plan), ("answers", answers)],
        client,
        record_id,
    )
}
