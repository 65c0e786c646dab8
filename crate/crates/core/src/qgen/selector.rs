use super::client::{ChatClient, ChatRequest};
use super::parse::parse_selection;
use super::prompts::{format_plan, PromptKit};
use crate::synth::{retain_in_pool, EntitySelector, SelectionRequest, SelectorError};

/// Ask the model to pick a candidate for one hole. The result only ever
/// contains ids from `request.candidates`; anything else is dropped here,
/// whatever the model says.
pub fn select_entities(
    request: &SelectionRequest<'_>,
    client: &dyn ChatClient,
    kit: &PromptKit,
) -> Result<Vec<String>, SelectorError> {
    let plan = format_plan(request.rendered_plan);
    let candidates = request
        .candidates
        .iter()
        .map(|e| format!("- {}: {}", e.id, e.label))
        .collect::<Vec<_>>()
        .join("\n");
    let user = kit
        .entity_selection
        .fill(&[
            ("plan", &plan),
            ("placeholder", &request.placeholder),
            ("slot_type", request.slot_type),
            ("candidates", &candidates),
        ])
        .map_err(|e| SelectorError::Client(e.to_string()))?;
    let chat = ChatRequest {
        purpose: kit.entity_selection.name.clone(),
        record_id: Some(request.placeholder.clone()),
        system: kit.entity_selection.system.clone(),
        user,
    };
    let raw = client.complete(&chat).map_err(|e| SelectorError::Client(e.to_string()))?;
    let ids = parse_selection(&raw, &request.placeholder).map_err(|e| SelectorError::Malformed(e.reason))?;
    let (kept, dropped) = retain_in_pool(ids, request.candidates);
    if !dropped.is_empty() {
        log::warn!("dropping selected ids outside the candidate pool: {dropped:?}");
        if kept.is_empty() {
            return Err(SelectorError::Rejected(dropped));
        }
    }
    Ok(kept)
}

/// [`EntitySelector`] backed by a chat model.
pub struct LlmSelector<'a> {
    pub client: &'a dyn ChatClient,
    pub kit: &'a PromptKit,
}

impl EntitySelector for LlmSelector<'_> {
    fn name(&self) -> &str {
        "llm"
    }

    fn select(&self, request: &SelectionRequest<'_>) -> Result<Vec<String>, SelectorError> {
        select_entities(request, self.client, self.kit)
    }
}
