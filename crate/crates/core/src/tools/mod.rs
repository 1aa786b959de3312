//! Declarative tool registry: descriptors, the planner's filtered view, and the uniform
//! normalize, validate, execute, postprocess pipeline.

mod builtin;
mod keys;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::agent::{AgentState, StateField, StateUpdate, UserIntent};
use crate::ingest::{sanitize_ocr_text, IngestError, PdfType};
use crate::llm::LlmError;
use crate::metrics::canonical_input;

pub use builtin::{llm_tools, register_default_tools, text_tools};
pub use keys::parse_target_keys;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolIntent {
    TextExtraction,
    LanguageDetection,
    ModalityDetection,
    IntentClassification,
    KeyParsing,
    KvpExtraction,
    QuestionAnswering,
    Verification,
    Translation,
    Sanitization,
}

impl ToolIntent {
    pub fn as_str(self) -> &'static str {
        match self {
            ToolIntent::TextExtraction => "text_extraction",
            ToolIntent::LanguageDetection => "language_detection",
            ToolIntent::ModalityDetection => "modality_detection",
            ToolIntent::IntentClassification => "intent_classification",
            ToolIntent::KeyParsing => "key_parsing",
            ToolIntent::KvpExtraction => "kvp_extraction",
            ToolIntent::QuestionAnswering => "question_answering",
            ToolIntent::Verification => "verification",
            ToolIntent::Translation => "translation",
            ToolIntent::Sanitization => "sanitization",
        }
    }

    /// Task-specific intents conflict with the other user intent; shared intents never do.
    pub fn conflicts_with(self, user_intent: UserIntent) -> bool {
        matches!(
            (self, user_intent),
            (ToolIntent::KvpExtraction, UserIntent::QuestionAnswering)
                | (ToolIntent::QuestionAnswering, UserIntent::KvpExtraction)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    String,
    StringList,
    Object,
    Any,
}

impl FieldKind {
    fn accepts(self, v: &Value) -> bool {
        match self {
            FieldKind::String => v.is_string(),
            FieldKind::StringList => v.as_array().is_some_and(|a| a.iter().all(Value::is_string)),
            FieldKind::Object => v.is_object(),
            FieldKind::Any => true,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FieldKind::String => "string",
            FieldKind::StringList => "list of strings",
            FieldKind::Object => "object",
            FieldKind::Any => "any",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: FieldKind,
    pub required: bool,
}

impl FieldSpec {
    pub fn required(name: &str, kind: FieldKind) -> Self {
        Self { name: name.to_string(), kind, required: true }
    }

    pub fn optional(name: &str, kind: FieldKind) -> Self {
        Self { name: name.to_string(), kind, required: false }
    }
}

/// Checks a normalized input against a field list.
pub fn validate_input(schema: &[FieldSpec], input: &Map<String, Value>) -> Result<(), ToolError> {
    for spec in schema {
        match input.get(&spec.name) {
            None | Some(Value::Null) if spec.required => {
                return Err(ToolError::validation(format!("missing required field {:?}", spec.name)));
            }
            None | Some(Value::Null) => {}
            Some(v) if !spec.kind.accepts(v) => {
                return Err(ToolError::validation(format!("field {:?} must be {}", spec.name, spec.kind.label())));
            }
            Some(_) => {}
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolErrorKind {
    Validation,
    Runtime,
    ContentFilter,
    Parse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind:?} error: {message}")]
pub struct ToolError {
    pub kind: ToolErrorKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_output: Option<String>,
}

impl ToolError {
    pub fn new(kind: ToolErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into(), raw_output: None }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ToolErrorKind::Validation, message)
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self::new(ToolErrorKind::Runtime, message)
    }

    pub fn parse(message: impl Into<String>, raw: impl Into<String>) -> Self {
        Self { kind: ToolErrorKind::Parse, message: message.into(), raw_output: Some(raw.into()) }
    }
}

impl From<LlmError> for ToolError {
    fn from(e: LlmError) -> Self {
        let kind = match e {
            LlmError::ContentFilter(_) => ToolErrorKind::ContentFilter,
            _ => ToolErrorKind::Runtime,
        };
        ToolError::new(kind, e.to_string())
    }
}

impl From<IngestError> for ToolError {
    fn from(e: IngestError) -> Self {
        ToolError::runtime(e.to_string())
    }
}

pub type ToolInput = Map<String, Value>;
pub type NormalizeFn = fn(&AgentState, &Value) -> Result<ToolInput, ToolError>;
pub type ExecuteFn = Arc<dyn Fn(&ToolInput) -> Result<Value, ToolError> + Send + Sync>;
pub type PostprocessFn = fn(&Value, &AgentState) -> Result<Vec<StateUpdate>, ToolError>;

/// A capability record. Execution only sees the normalized input, so a tool can touch
/// the state solely through the updates its postprocess step returns.
#[derive(Clone)]
pub struct ToolDescriptor {
    pub name: String,
    pub intent: ToolIntent,
    pub compatible_pdf_types: Vec<PdfType>,
    pub requires_previous_output: bool,
    /// Upstream fields that must all be present when `requires_previous_output` is set.
    pub required_fields: Vec<StateField>,
    /// At least one of these must be present (empty means no constraint).
    pub required_any: Vec<StateField>,
    pub description: String,
    pub input_schema: Vec<FieldSpec>,
    /// Fields the postprocess step may write.
    pub updates: Vec<StateField>,
    pub normalize_input: NormalizeFn,
    pub execute: ExecuteFn,
    pub postprocess: PostprocessFn,
}

impl fmt::Debug for ToolDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToolDescriptor")
            .field("name", &self.name)
            .field("intent", &self.intent)
            .field("compatible_pdf_types", &self.compatible_pdf_types)
            .field("requires_previous_output", &self.requires_previous_output)
            .field("updates", &self.updates)
            .finish()
    }
}

impl ToolDescriptor {
    /// Whether the tool may be offered for `state`.
    pub fn is_available(&self, state: &AgentState) -> bool {
        if let Some(t) = state.pdf_type {
            if !self.compatible_pdf_types.contains(&t) {
                return false;
            }
        }
        if self.requires_previous_output && !self.required_fields.iter().all(|f| state.has(*f)) {
            return false;
        }
        self.required_any.is_empty() || self.required_any.iter().any(|f| state.has(*f))
    }

    /// Normalized and validated input.
    pub fn prepare(&self, state: &AgentState, raw: &Value) -> Result<ToolInput, ToolError> {
        let input = (self.normalize_input)(state, raw)?;
        validate_input(&self.input_schema, &input)?;
        Ok(input)
    }

    /// Canonical key of a call, used for repeat detection: the normalized input when it
    /// normalizes, the raw parameters otherwise.
    pub fn input_key(&self, state: &AgentState, raw: &Value) -> String {
        match self.prepare(state, raw) {
            Ok(input) => canonical_input(&Value::Object(input)),
            Err(_) => canonical_input(raw),
        }
    }

    /// Schema as a JSON field list, for prompts and documentation.
    pub fn schema_json(&self) -> Value {
        serde_json::to_value(&self.input_schema).expect("schema serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolResult {
    pub input: ToolInput,
    pub output: Value,
    pub updates: Vec<StateUpdate>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("tool {0:?} is already registered")]
    Duplicate(String),
}

/// Immutable after construction; safe to share across concurrent runs.
#[derive(Debug, Clone, Default)]
pub struct ToolRegistry {
    tools: Vec<ToolDescriptor>,
    index: HashMap<String, usize>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, tool: ToolDescriptor) -> Result<(), RegistryError> {
        if self.index.contains_key(&tool.name) {
            return Err(RegistryError::Duplicate(tool.name));
        }
        self.index.insert(tool.name.clone(), self.tools.len());
        self.tools.push(tool);
        Ok(())
    }

    /// Merges several tool sets, rejecting duplicate names.
    pub fn from_sets(sets: impl IntoIterator<Item = Vec<ToolDescriptor>>) -> Result<Self, RegistryError> {
        let mut registry = Self::new();
        for tool in sets.into_iter().flatten() {
            registry.register(tool)?;
        }
        Ok(registry)
    }

    pub fn get(&self, name: &str) -> Option<&ToolDescriptor> {
        self.index.get(name).map(|&i| &self.tools[i])
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.tools.iter().map(|t| t.name.as_str()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ToolDescriptor> {
        self.tools.iter()
    }

    /// Tools applicable to `state`, in registration order.
    pub fn compatible_with(&self, state: &AgentState) -> Vec<&ToolDescriptor> {
        self.tools.iter().filter(|t| t.is_available(state)).collect()
    }
}

/// Runs one tool: normalize, validate, execute, postprocess. A content-filter rejection
/// of an input carrying document text is retried once with sanitized text.
pub fn invoke(tool: &ToolDescriptor, state: &AgentState, raw: &Value) -> Result<ToolResult, ToolError> {
    let input = tool.prepare(state, raw)?;
    let output = match (tool.execute)(&input) {
        Err(e) if e.kind == ToolErrorKind::ContentFilter => match input.get("document_text").and_then(Value::as_str) {
            Some(text) => {
                let mut retry = input.clone();
                retry.insert("document_text".into(), Value::String(sanitize_ocr_text(text)));
                (tool.execute)(&retry)?
            }
            None => return Err(e),
        },
        other => other?,
    };
    let updates: Vec<StateUpdate> = (tool.postprocess)(&output, state)?;
    if let Some(u) = updates.iter().find(|u| !tool.updates.contains(&u.field())) {
        return Err(ToolError::runtime(format!("{} produced an undeclared update to {}", tool.name, u.field().name())));
    }
    Ok(ToolResult { input, output, updates })
}
