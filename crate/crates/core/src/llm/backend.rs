use serde::{Deserialize, Serialize};

/// One chat-completion request. `call_site` names the caller (e.g. `planner`,
/// `tool/extract_key_values`) and is used for accounting and scripted replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub call_site: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Base64-encoded PNG page images for vision requests.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_tokens: Option<u64>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Self { text: text.into(), input_tokens: None, output_tokens: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("backend unreachable: {0}")]
    Transport(String),
    #[error("backend returned an error: {0}")]
    Api(String),
    #[error("request rejected by content filter: {0}")]
    ContentFilter(String),
    #[error("scripted responses exhausted for call site {0:?}")]
    ScriptExhausted(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

/// A chat-completion backend. Implementations must accept concurrent calls.
pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError>;

    fn name(&self) -> &str {
        "backend"
    }
}
