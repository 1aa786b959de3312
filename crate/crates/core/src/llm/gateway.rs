use std::sync::Arc;
use std::time::Instant;

use super::backend::{Completion, CompletionRequest, LlmBackend, LlmError};
use super::ledger::{estimate_tokens, LedgerEntry, UsageLedger};

pub const DEFAULT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_TOKENS: u32 = 4096;

/// Backend handle plus accounting. Every call appends exactly one ledger entry, failed
/// calls included.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn LlmBackend>,
    ledger: Arc<UsageLedger>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.backend.name())
            .field("temperature", &self.temperature)
            .field("max_tokens", &self.max_tokens)
            .finish()
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn LlmBackend>, ledger: Arc<UsageLedger>) -> Self {
        Self { backend, ledger, temperature: DEFAULT_TEMPERATURE, max_tokens: DEFAULT_MAX_TOKENS }
    }

    pub fn ledger(&self) -> &Arc<UsageLedger> {
        &self.ledger
    }

    pub fn backend(&self) -> &Arc<dyn LlmBackend> {
        &self.backend
    }

    pub fn complete(&self, call_site: &str, prompt: &str) -> Result<Completion, LlmError> {
        self.complete_with_images(call_site, prompt, Vec::new())
    }

    pub fn complete_with_images(&self, call_site: &str, prompt: &str, images: Vec<String>) -> Result<Completion, LlmError> {
        let request = CompletionRequest {
            call_site: call_site.to_string(),
            prompt: prompt.to_string(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            images,
        };
        let started = Instant::now();
        let result = self.backend.complete(&request);
        let wall_ms = started.elapsed().as_millis() as u64;
        let (input_tokens, output_tokens) = match &result {
            Ok(c) => (
                c.input_tokens.unwrap_or_else(|| estimate_tokens(prompt)),
                c.output_tokens.unwrap_or_else(|| estimate_tokens(&c.text)),
            ),
            Err(_) => (estimate_tokens(prompt), 0),
        };
        self.ledger.record(LedgerEntry { call_site: call_site.to_string(), input_tokens, output_tokens, wall_ms });
        result
    }
}
