use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::backend::{Completion, CompletionRequest, LlmBackend, LlmError};

/// One scripted reply: plain text, a completion with token counts, or an error.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    Text(String),
    Error {
        error: String,
        #[serde(default)]
        kind: ScriptErrorKind,
    },
    Completion(Completion),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptErrorKind {
    #[default]
    Transport,
    Api,
    ContentFilter,
}

/// Replays fixed responses in order, one queue per call site.
///
/// Call sites are `/`-separated; a request for `tool/extract_key_values` is served from the
/// most specific queue present (`tool/extract_key_values`, then `tool`, then `default`).
/// Running out of responses is reported as [`LlmError::ScriptExhausted`].
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queues: Mutex<HashMap<String, VecDeque<ScriptEntry>>>,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<ScriptEntry>)>,
        S: Into<String>,
    {
        let backend = Self::new();
        for (site, list) in entries {
            backend.queues.lock().expect("script poisoned").entry(site.into()).or_default().extend(list);
        }
        backend
    }

    /// Parses `{"call_site": [entry, ...], ...}`.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let map: HashMap<String, Vec<ScriptEntry>> = serde_json::from_str(text)?;
        Ok(Self::from_entries(map))
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))
    }

    pub fn push(&self, call_site: &str, entry: ScriptEntry) -> &Self {
        self.queues.lock().expect("script poisoned").entry(call_site.to_string()).or_default().push_back(entry);
        self
    }

    pub fn push_text(&self, call_site: &str, text: impl Into<String>) -> &Self {
        self.push(call_site, ScriptEntry::Text(text.into()))
    }

    /// Requests received so far, in arrival order.
    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().expect("script poisoned").clone()
    }

    pub fn remaining(&self) -> usize {
        self.queues.lock().expect("script poisoned").values().map(VecDeque::len).sum()
    }
}

fn candidates(call_site: &str) -> Vec<&str> {
    let mut out = vec![call_site];
    let mut rest = call_site;
    while let Some(i) = rest.rfind('/') {
        rest = &rest[..i];
        out.push(rest);
    }
    out.push("default");
    out
}

impl LlmBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        self.requests.lock().expect("script poisoned").push(request.clone());
        let mut queues = self.queues.lock().expect("script poisoned");
        let entry = candidates(&request.call_site)
            .into_iter()
            .find_map(|site| queues.get_mut(site).and_then(VecDeque::pop_front))
            .ok_or_else(|| LlmError::ScriptExhausted(request.call_site.clone()))?;
        match entry {
            ScriptEntry::Text(text) => Ok(Completion::text(text)),
            ScriptEntry::Completion(c) => Ok(c),
            ScriptEntry::Error { error, kind } => Err(match kind {
                ScriptErrorKind::Transport => LlmError::Transport(error),
                ScriptErrorKind::Api => LlmError::Api(error),
                ScriptErrorKind::ContentFilter => LlmError::ContentFilter(error),
            }),
        }
    }

    fn name(&self) -> &str {
        "scripted"
    }
}
