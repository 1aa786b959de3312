use std::time::Duration;

use serde_json::{json, Value};

use super::backend::{Completion, CompletionRequest, LlmBackend, LlmError};

/// Client for OpenAI-compatible `/chat/completions` endpoints.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    base_url: String,
    model: String,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(base_url: &str, model: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self { client, base_url: base_url.trim_end_matches('/').to_string(), model: model.to_string(), api_key })
    }

    /// Request body in the chat-completions shape. Images become `image_url` parts.
    pub fn request_body(&self, request: &CompletionRequest) -> Value {
        let content = if request.images.is_empty() {
            Value::String(request.prompt.clone())
        } else {
            let mut parts = vec![json!({"type": "text", "text": request.prompt})];
            parts.extend(request.images.iter().map(|img| {
                json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{img}")}})
            }));
            Value::Array(parts)
        };
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }
}

/// Extracts text and usage from a chat-completions response body.
pub fn parse_response(body: &Value) -> Result<Completion, LlmError> {
    if let Some(err) = body.get("error") {
        let message = err.get("message").and_then(Value::as_str).unwrap_or("unknown error").to_string();
        let code = err.get("code").and_then(Value::as_str).unwrap_or_default();
        return Err(if code == "content_filter" { LlmError::ContentFilter(message) } else { LlmError::Api(message) });
    }
    let choice = body
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| LlmError::Api("response has no choices".into()))?;
    if choice.get("finish_reason").and_then(Value::as_str) == Some("content_filter") {
        return Err(LlmError::ContentFilter("completion stopped by content filter".into()));
    }
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::Api("response has no message content".into()))?
        .to_string();
    let usage = body.get("usage");
    Ok(Completion {
        text,
        input_tokens: usage.and_then(|u| u.get("prompt_tokens")).and_then(Value::as_u64),
        output_tokens: usage.and_then(|u| u.get("completion_tokens")).and_then(Value::as_u64),
    })
}

impl LlmBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let mut req = self.client.post(format!("{}/chat/completions", self.base_url)).json(&self.request_body(request));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let body: Value = resp.json().map_err(|e| LlmError::Api(format!("HTTP {status}: invalid JSON body: {e}")))?;
        match parse_response(&body) {
            Err(LlmError::Api(msg)) if !status.is_success() => Err(LlmError::Api(format!("HTTP {status}: {msg}"))),
            other => other,
        }
    }

    fn name(&self) -> &str {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_shape() {
        let b = HttpBackend::new("http://localhost:1/v1/", "gpt-4o", None, Duration::from_secs(1)).unwrap();
        let req = CompletionRequest { call_site: "x".into(), prompt: "hi".into(), temperature: 0.0, max_tokens: 5, images: vec![] };
        let body = b.request_body(&req);
        assert_eq!(body["messages"][0]["content"], "hi");
        assert_eq!(body["temperature"], 0.0);
        let req = CompletionRequest { images: vec!["AAAA".into()], ..req };
        assert_eq!(b.request_body(&req)["messages"][0]["content"][1]["image_url"]["url"], "data:image/png;base64,AAAA");
    }

    #[test]
    fn response_parsing() {
        let body = json!({
            "choices": [{"message": {"content": "{}"}, "finish_reason": "stop"}],
            "usage": {"prompt_tokens": 12, "completion_tokens": 2}
        });
        let c = parse_response(&body).unwrap();
        assert_eq!((c.text.as_str(), c.input_tokens, c.output_tokens), ("{}", Some(12), Some(2)));
        let filtered = json!({"error": {"message": "flagged", "code": "content_filter"}});
        assert!(matches!(parse_response(&filtered), Err(LlmError::ContentFilter(_))));
    }

    #[test]
    fn unreachable_host_is_transport_error() {
        let b = HttpBackend::new("http://127.0.0.1:9", "m", None, Duration::from_millis(500)).unwrap();
        let req = CompletionRequest { call_site: "x".into(), prompt: "hi".into(), temperature: 0.0, max_tokens: 5, images: vec![] };
        assert!(matches!(b.complete(&req), Err(LlmError::Transport(_))));
    }
}
