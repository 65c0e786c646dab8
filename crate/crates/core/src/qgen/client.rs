//! Chat-completion clients.
//!
//! Three interchangeable implementations sit behind [`ChatClient`]: a JSON
//! HTTP client for OpenAI-style endpoints, a stub that replays canned
//! responses from a JSONL fixture, and an offline client that refuses every
//! call. [`Throttled`] wraps any of them with a concurrency limit and a call
//! counter.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("network access is disabled (offline mode)")]
    Offline,
    #[error("network error: {0}")]
    Network(String),
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("endpoint returned HTTP {0}")]
    Status(u16),
    #[error("environment variable `{0}` holding the API token is not set")]
    MissingToken(String),
    #[error("unexpected response body: {0}")]
    Response(String),
    #[error("client configuration: {0}")]
    Config(String),
    #[error("stub fixture {path}:{line}: {message}")]
    Fixture { path: String, line: usize, message: String },
    #[error("stub fixture has no response for `{0}`")]
    NoFixture(String),
}

impl ClientError {
    /// Transient failures worth another attempt.
    pub fn is_retriable(&self) -> bool {
        match self {
            ClientError::Network(_) => true,
            ClientError::Status(code) => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

/// One chat completion: a system prompt and a user message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    /// Which prompt this is, e.g. `translation`; used for stub lookups and logs.
    pub purpose: String,
    /// Record (or placeholder) the call is about, if any.
    pub record_id: Option<String>,
    pub system: String,
    pub user: String,
}

impl ChatRequest {
    /// Hex SHA-256 over the canonical JSON of the two messages. Model and
    /// provider settings are excluded so fixtures survive endpoint changes.
    pub fn hash(&self) -> String {
        let body = crate::canonical::to_string(&serde_json::json!({
            "system": self.system,
            "user": self.user,
        }));
        hex::encode(Sha256::digest(body.as_bytes()))
    }

    /// Stub lookup keys, most specific first.
    pub fn lookup_keys(&self) -> Vec<String> {
        let mut keys = vec![self.hash()];
        if let Some(id) = &self.record_id {
            keys.push(format!("{}/{id}", self.purpose));
            keys.push(id.clone());
        }
        keys.push(self.purpose.clone());
        keys
    }
}

pub trait ChatClient: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientKind {
    #[default]
    Http,
    Stub,
    Offline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    pub kind: ClientKind,
    pub base_url: String,
    pub path: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub timeout_secs: u64,
    /// Transport retries per call, for network errors, 429 and 5xx.
    pub max_retries: u32,
    /// Upper bound on concurrent in-flight calls.
    pub parallelism: usize,
    /// Retries of the translation prompt when its response does not parse.
    pub translation_retries: u32,
    pub model_field: String,
    pub messages_field: String,
    /// JSON pointer to the completion text in the response body.
    pub response_pointer: String,
    /// Extra top-level request fields, e.g. `temperature`.
    pub extra_body: serde_json::Map<String, serde_json::Value>,
    /// Fixture file for `kind = "stub"`.
    pub stub_fixture: Option<PathBuf>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            kind: ClientKind::Http,
            base_url: "https://api.openai.com/v1".into(),
            path: "/chat/completions".into(),
            model: "gpt-5-mini".into(),
            token_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120,
            max_retries: 3,
            parallelism: 4,
            translation_retries: 3,
            model_field: "model".into(),
            messages_field: "messages".into(),
            response_pointer: "/choices/0/message/content".into(),
            extra_body: serde_json::Map::new(),
            stub_fixture: None,
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.parallelism == 0 {
            return Err(ClientError::Config("parallelism must be at least 1".into()));
        }
        if self.kind == ClientKind::Stub && self.stub_fixture.is_none() {
            return Err(ClientError::Config("stub client needs `stub_fixture`".into()));
        }
        if !self.response_pointer.is_empty() && !self.response_pointer.starts_with('/') {
            return Err(ClientError::Config("response_pointer must start with `/`".into()));
        }
        Ok(())
    }
}

/// Build the client described by `config`, throttled to its parallelism.
pub fn build_client(config: &ClientConfig) -> Result<Throttled, ClientError> {
    config.validate()?;
    let inner: Box<dyn ChatClient> = match config.kind {
        ClientKind::Offline => Box::new(OfflineClient),
        ClientKind::Stub => Box::new(StubClient::from_file(
            config.stub_fixture.as_deref().expect("validated"),
        )?),
        #[cfg(feature = "http")]
        ClientKind::Http => Box::new(HttpClient::new(config.clone())?),
        #[cfg(not(feature = "http"))]
        ClientKind::Http => {
            return Err(ClientError::Config(
                "built without the `http` feature; use a stub or offline client".into(),
            ))
        }
    };
    Ok(Throttled::new(inner, config.parallelism))
}

/// Refuses every call.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineClient;

impl ChatClient for OfflineClient {
    fn name(&self) -> &str {
        "offline"
    }

    fn complete(&self, _request: &ChatRequest) -> Result<String, ClientError> {
        Err(ClientError::Offline)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct StubLine {
    key: String,
    #[serde(default)]
    response: Option<String>,
    /// Simulated failure: `network`, `auth`, `offline` or an HTTP status.
    #[serde(default)]
    error: Option<String>,
}

#[derive(Debug, Clone)]
enum StubReply {
    Text(String),
    Fail(ClientError),
}

/// Replays canned responses. Each fixture line is
/// `{"key": ..., "response": ...}` or `{"key": ..., "error": ...}`; keys are
/// tried in the order of [`ChatRequest::lookup_keys`]: request hash,
/// `purpose/record_id`, `record_id`, then bare `purpose` as a catch-all.
/// Repeating a key queues replies for successive calls; the last one then
/// repeats forever.
#[derive(Debug, Default)]
pub struct StubClient {
    replies: HashMap<String, Vec<StubReply>>,
    served: Mutex<HashMap<String, usize>>,
}

impl StubClient {
    pub fn from_file(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClientError::Fixture {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        Self::from_jsonl(&text, &path.display().to_string())
    }

    pub fn from_jsonl(text: &str, origin: &str) -> Result<Self, ClientError> {
        let mut stub = StubClient::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fail = |message: String| ClientError::Fixture {
                path: origin.to_string(),
                line: n + 1,
                message,
            };
            let parsed: StubLine = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
            let reply = match (parsed.response, parsed.error) {
                (Some(text), None) => StubReply::Text(text),
                (None, Some(kind)) => StubReply::Fail(match kind.as_str() {
                    "network" => ClientError::Network("simulated".into()),
                    "auth" => ClientError::Auth("simulated".into()),
                    "offline" => ClientError::Offline,
                    other => ClientError::Status(
                        other
                            .parse()
                            .map_err(|_| fail(format!("unknown simulated error `{other}`")))?,
                    ),
                }),
                _ => return Err(fail("exactly one of `response` and `error` is required".into())),
            };
            stub.replies.entry(parsed.key).or_default().push(reply);
        }
        Ok(stub)
    }

    /// Add a reply programmatically.
    pub fn with(mut self, key: impl Into<String>, response: impl Into<String>) -> Self {
        self.replies
            .entry(key.into())
            .or_default()
            .push(StubReply::Text(response.into()));
        self
    }

    /// Add a simulated failure programmatically.
    pub fn with_error(mut self, key: impl Into<String>, error: ClientError) -> Self {
        self.replies.entry(key.into()).or_default().push(StubReply::Fail(error));
        self
    }
}

impl ChatClient for StubClient {
    fn name(&self) -> &str {
        "stub"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        for key in request.lookup_keys() {
            if let Some(queue) = self.replies.get(&key) {
                let mut served = self.served.lock().expect("stub lock");
                let n = served.entry(key).or_default();
                let reply = &queue[(*n).min(queue.len() - 1)];
                *n += 1;
                return match reply {
                    StubReply::Text(t) => Ok(t.clone()),
                    StubReply::Fail(e) => Err(e.clone()),
                };
            }
        }
        Err(ClientError::NoFixture(format!(
            "{} ({})",
            request.purpose,
            request.record_id.as_deref().unwrap_or("no record")
        )))
    }
}

/// Concurrency limit plus call accounting around any client.
pub struct Throttled {
    inner: Box<dyn ChatClient>,
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
    calls: AtomicUsize,
    peak: AtomicUsize,
}

impl Throttled {
    pub fn new(inner: Box<dyn ChatClient>, limit: usize) -> Self {
        Throttled {
            inner,
            limit: limit.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            calls: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Highest number of calls that were in flight at once.
    pub fn peak_concurrency(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    pub fn limit(&self) -> usize {
        self.limit
    }
}

impl ChatClient for Throttled {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        {
            let mut n = self.in_flight.lock().expect("throttle lock");
            while *n >= self.limit {
                n = self.freed.wait(n).expect("throttle lock");
            }
            *n += 1;
            self.peak.fetch_max(*n, Ordering::SeqCst);
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let result = self.inner.complete(request);
        *self.in_flight.lock().expect("throttle lock") -= 1;
        self.freed.notify_one();
        result
    }
}

#[cfg(feature = "http")]
pub use http::HttpClient;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde_json::{json, Value};

    use super::{ChatClient, ChatRequest, ClientConfig, ClientError};

    const LOG_LIMIT: usize = 2000;

    /// Blocking JSON chat-completion client.
    pub struct HttpClient {
        agent: ureq::Agent,
        url: String,
        token: String,
        config: ClientConfig,
    }

    impl HttpClient {
        /// Reads the token from the configured environment variable.
        pub fn new(config: ClientConfig) -> Result<Self, ClientError> {
            let token =
                std::env::var(&config.token_env).map_err(|_| ClientError::MissingToken(config.token_env.clone()))?;
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
                .build()
                .into();
            let url = format!(
                "{}/{}",
                config.base_url.trim_end_matches('/'),
                config.path.trim_start_matches('/')
            );
            Ok(HttpClient {
                agent,
                url,
                token,
                config,
            })
        }

        fn body(&self, request: &ChatRequest) -> Value {
            let mut body = self.config.extra_body.clone();
            body.insert(self.config.model_field.clone(), json!(self.config.model));
            body.insert(
                self.config.messages_field.clone(),
                json!([
                    {"role": "system", "content": request.system},
                    {"role": "user", "content": request.user},
                ]),
            );
            Value::Object(body)
        }

        fn once(&self, body: &Value) -> Result<String, ClientError> {
            let response = self
                .agent
                .post(&self.url)
                .header("Authorization", &format!("Bearer {}", self.token))
                .send_json(body)
                .map_err(|e| match e {
                    ureq::Error::StatusCode(code @ (401 | 403)) => ClientError::Auth(format!("HTTP {code}")),
                    ureq::Error::StatusCode(code) => ClientError::Status(code),
                    other => ClientError::Network(other.to_string()),
                })?;
            let value: Value = response
                .into_body()
                .read_json()
                .map_err(|e| ClientError::Response(e.to_string()))?;
            log::debug!("chat response: {}", clip(&value.to_string()));
            value
                .pointer(&self.config.response_pointer)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| {
                    ClientError::Response(format!("no string at `{}`", self.config.response_pointer))
                })
        }
    }

    /// Bodies are logged without headers, so the token never reaches the log.
    fn clip(text: &str) -> String {
        match text.char_indices().nth(LOG_LIMIT) {
            Some((i, _)) => format!("{}... ({} bytes)", &text[..i], text.len()),
            None => text.to_string(),
        }
    }

    impl ChatClient for HttpClient {
        fn name(&self) -> &str {
            "http"
        }

        fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
            let body = self.body(request);
            log::debug!("POST {} [{}]: {}", self.url, request.purpose, clip(&body.to_string()));
            let mut attempt = 0;
            loop {
                match self.once(&body) {
                    Err(e) if e.is_retriable() && attempt < self.config.max_retries => {
                        let wait = Duration::from_millis(500 << attempt.min(6));
                        log::warn!("{} call failed ({e}); retrying in {wait:?}", request.purpose);
                        std::thread::sleep(wait);
                        attempt += 1;
                    }
                    other => return other,
                }
            }
        }
    }
}
