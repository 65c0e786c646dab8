//! Question generation and vetting.
//!
//! Executed plans are turned into natural-language questions by a chat
//! model, and both the plan and the finished question/answer pair are
//! classified Valid or Invalid by the same model. A template translation
//! stands in when the model is unavailable or unparsable, so every stage
//! also runs offline.

mod client;
mod parse;
mod pipeline;
mod prompts;
mod selector;
mod translate;
mod vet;

pub use client::{
    build_client, ChatClient, ChatRequest, ClientConfig, ClientError, ClientKind, OfflineClient, StubClient,
    Throttled,
};
#[cfg(feature = "http")]
pub use client::HttpClient;
pub use parse::{parse_classification, parse_selection, parse_translation, MalformedResponse, TranslationResult, Verdict};
pub use pipeline::{translate_dataset, Dropped, TranslatePolicy, TranslateReport};
pub use prompts::{format_answers, format_branched, format_plan, PromptError, PromptKit, PromptTemplate};
pub use selector::{select_entities, LlmSelector};
pub use translate::{template_translate, translate, TranslationOutcome};
pub use vet::{vet_plan, vet_qa, VetError};
