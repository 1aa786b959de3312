use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::annotations::Answer;
use crate::ingest::PdfType;
use crate::schema::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentStatus {
    Plan,
    NeedTool,
    Respond,
    Success,
    End,
}

impl AgentStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, AgentStatus::Success | AgentStatus::End)
    }

    /// Transitions the state graph may take.
    pub const EDGES: [(AgentStatus, AgentStatus); 6] = [
        (AgentStatus::Plan, AgentStatus::NeedTool),
        (AgentStatus::Plan, AgentStatus::Respond),
        (AgentStatus::Plan, AgentStatus::End),
        (AgentStatus::NeedTool, AgentStatus::Plan),
        (AgentStatus::Respond, AgentStatus::Success),
        (AgentStatus::Respond, AgentStatus::Plan),
    ];

    pub fn can_transition(self, to: AgentStatus) -> bool {
        Self::EDGES.contains(&(self, to))
    }
}

impl fmt::Display for AgentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentStatus::Plan => "PLAN",
            AgentStatus::NeedTool => "NEED_TOOL",
            AgentStatus::Respond => "RESPOND",
            AgentStatus::Success => "SUCCESS",
            AgentStatus::End => "END",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserIntent {
    KvpExtraction,
    QuestionAnswering,
}

impl UserIntent {
    pub fn as_str(self) -> &'static str {
        match self {
            UserIntent::KvpExtraction => "kvp_extraction",
            UserIntent::QuestionAnswering => "question_answering",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "kvp_extraction" | "kvp" | "extraction" => Some(UserIntent::KvpExtraction),
            "question_answering" | "qa" => Some(UserIntent::QuestionAnswering),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub verified: bool,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LastError {
    pub tool: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_output: Option<String>,
}

/// Task-relevant state fields that tools may write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateField {
    UserIntent,
    PdfType,
    DocumentText,
    DocumentLanguage,
    UserLanguage,
    TargetKeys,
    TranslatedTargetKeys,
    ExtractedKvps,
    TranslatedKvps,
    QaQuestion,
    QaAnswer,
    TranslatedAnswer,
    VerificationResult,
}

impl StateField {
    pub const ALL: [StateField; 13] = [
        StateField::UserIntent,
        StateField::PdfType,
        StateField::DocumentText,
        StateField::DocumentLanguage,
        StateField::UserLanguage,
        StateField::TargetKeys,
        StateField::TranslatedTargetKeys,
        StateField::ExtractedKvps,
        StateField::TranslatedKvps,
        StateField::QaQuestion,
        StateField::QaAnswer,
        StateField::TranslatedAnswer,
        StateField::VerificationResult,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StateField::UserIntent => "user_intent",
            StateField::PdfType => "pdf_type",
            StateField::DocumentText => "document_text",
            StateField::DocumentLanguage => "document_language",
            StateField::UserLanguage => "user_language",
            StateField::TargetKeys => "target_keys",
            StateField::TranslatedTargetKeys => "translated_target_keys",
            StateField::ExtractedKvps => "extracted_kvps",
            StateField::TranslatedKvps => "translated_kvps",
            StateField::QaQuestion => "qa_question",
            StateField::QaAnswer => "qa_answer",
            StateField::TranslatedAnswer => "translated_answer",
            StateField::VerificationResult => "verification_result",
        }
    }
}

/// A typed write to one state field, produced by a tool's postprocess step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", content = "value", rename_all = "snake_case")]
pub enum StateUpdate {
    UserIntent(UserIntent),
    PdfType(PdfType),
    DocumentText(String),
    DocumentLanguage(Language),
    UserLanguage(Language),
    TargetKeys(Vec<String>),
    TranslatedTargetKeys(Vec<String>),
    ExtractedKvps(Map<String, Value>),
    TranslatedKvps(Map<String, Value>),
    QaQuestion(String),
    QaAnswer(Answer),
    TranslatedAnswer(Answer),
    VerificationResult(VerificationResult),
}

impl StateUpdate {
    pub fn field(&self) -> StateField {
        match self {
            StateUpdate::UserIntent(_) => StateField::UserIntent,
            StateUpdate::PdfType(_) => StateField::PdfType,
            StateUpdate::DocumentText(_) => StateField::DocumentText,
            StateUpdate::DocumentLanguage(_) => StateField::DocumentLanguage,
            StateUpdate::UserLanguage(_) => StateField::UserLanguage,
            StateUpdate::TargetKeys(_) => StateField::TargetKeys,
            StateUpdate::TranslatedTargetKeys(_) => StateField::TranslatedTargetKeys,
            StateUpdate::ExtractedKvps(_) => StateField::ExtractedKvps,
            StateUpdate::TranslatedKvps(_) => StateField::TranslatedKvps,
            StateUpdate::QaQuestion(_) => StateField::QaQuestion,
            StateUpdate::QaAnswer(_) => StateField::QaAnswer,
            StateUpdate::TranslatedAnswer(_) => StateField::TranslatedAnswer,
            StateUpdate::VerificationResult(_) => StateField::VerificationResult,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInvocationRecord {
    pub tool_name: String,
    /// Canonical form of the normalized input (sorted keys, collapsed whitespace).
    pub input: String,
    pub output: Value,
    pub success: bool,
    pub planner_reasoning: String,
    /// Milliseconds since the start of the run, from the run's clock.
    pub timestamp: u64,
    /// State fields whose value this invocation changed.
    #[serde(default)]
    pub changed_fields: Vec<StateField>,
}

/// Shared memory of one agent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub user_input: String,
    pub user_intent: Option<UserIntent>,
    pub pdf_path: PathBuf,
    pub pdf_type: Option<PdfType>,
    pub document_text: Option<String>,
    pub document_language: Option<Language>,
    pub user_language: Option<Language>,
    pub target_keys: Option<Vec<String>>,
    pub translated_target_keys: Option<Vec<String>>,
    pub extracted_kvps: Option<Map<String, Value>>,
    pub translated_kvps: Option<Map<String, Value>>,
    pub qa_question: Option<String>,
    pub qa_answer: Option<Answer>,
    pub translated_answer: Option<Answer>,
    pub verification_result: Option<VerificationResult>,
    pub tool_history: Vec<ToolInvocationRecord>,
    pub reasoning_history: Vec<String>,
    pub last_tool: Option<String>,
    pub last_tool_output: Option<Value>,
    pub last_error: Option<LastError>,
    pub status: AgentStatus,
    pub step_count: usize,
    /// Tool and raw input chosen by the planner for the executor.
    pub selected_tool: Option<String>,
    pub selected_input: Option<Value>,
    /// Tools withheld from the planner after an exact repeat, until the state changes.
    pub suppressed_tools: Vec<String>,
    /// Message recorded by the responder when there was nothing to return.
    pub fallback_message: Option<String>,
    pub end_reason: Option<String>,
    pub final_answer: Option<Value>,
}

impl AgentState {
    pub fn new(user_input: impl Into<String>, pdf_path: impl Into<PathBuf>) -> Self {
        Self {
            user_input: user_input.into(),
            user_intent: None,
            pdf_path: pdf_path.into(),
            pdf_type: None,
            document_text: None,
            document_language: None,
            user_language: None,
            target_keys: None,
            translated_target_keys: None,
            extracted_kvps: None,
            translated_kvps: None,
            qa_question: None,
            qa_answer: None,
            translated_answer: None,
            verification_result: None,
            tool_history: Vec::new(),
            reasoning_history: Vec::new(),
            last_tool: None,
            last_tool_output: None,
            last_error: None,
            status: AgentStatus::Plan,
            step_count: 0,
            selected_tool: None,
            selected_input: None,
            suppressed_tools: Vec::new(),
            fallback_message: None,
            end_reason: None,
            final_answer: None,
        }
    }

    pub fn with_intent(mut self, intent: UserIntent) -> Self {
        self.user_intent = Some(intent);
        self
    }

    pub fn with_user_language(mut self, lang: Language) -> Self {
        self.user_language = Some(lang);
        self
    }

    pub fn with_target_keys(mut self, keys: Vec<String>) -> Self {
        self.target_keys = Some(keys);
        self
    }

    pub fn with_question(mut self, question: impl Into<String>) -> Self {
        self.qa_question = Some(question.into());
        self
    }

    pub fn has(&self, field: StateField) -> bool {
        match field {
            StateField::UserIntent => self.user_intent.is_some(),
            StateField::PdfType => self.pdf_type.is_some(),
            StateField::DocumentText => self.document_text.as_deref().is_some_and(|t| !t.trim().is_empty()),
            StateField::DocumentLanguage => self.document_language.is_some(),
            StateField::UserLanguage => self.user_language.is_some(),
            StateField::TargetKeys => self.target_keys.as_ref().is_some_and(|k| !k.is_empty()),
            StateField::TranslatedTargetKeys => self.translated_target_keys.is_some(),
            StateField::ExtractedKvps => self.extracted_kvps.is_some(),
            StateField::TranslatedKvps => self.translated_kvps.is_some(),
            StateField::QaQuestion => self.qa_question.as_deref().is_some_and(|q| !q.trim().is_empty()),
            StateField::QaAnswer => self.qa_answer.is_some(),
            StateField::TranslatedAnswer => self.translated_answer.is_some(),
            StateField::VerificationResult => self.verification_result.is_some(),
        }
    }

    /// JSON view of one field, used for diffs and prompts.
    pub fn field_value(&self, field: StateField) -> Value {
        let v = match field {
            StateField::UserIntent => serde_json::to_value(self.user_intent),
            StateField::PdfType => serde_json::to_value(self.pdf_type),
            StateField::DocumentText => serde_json::to_value(&self.document_text),
            StateField::DocumentLanguage => serde_json::to_value(self.document_language),
            StateField::UserLanguage => serde_json::to_value(self.user_language),
            StateField::TargetKeys => serde_json::to_value(&self.target_keys),
            StateField::TranslatedTargetKeys => serde_json::to_value(&self.translated_target_keys),
            StateField::ExtractedKvps => serde_json::to_value(&self.extracted_kvps),
            StateField::TranslatedKvps => serde_json::to_value(&self.translated_kvps),
            StateField::QaQuestion => serde_json::to_value(&self.qa_question),
            StateField::QaAnswer => serde_json::to_value(&self.qa_answer),
            StateField::TranslatedAnswer => serde_json::to_value(&self.translated_answer),
            StateField::VerificationResult => serde_json::to_value(&self.verification_result),
        };
        v.expect("state fields serialize")
    }

    /// Fields whose value differs between `self` and `other`.
    pub fn changed_fields(&self, other: &AgentState) -> Vec<StateField> {
        StateField::ALL.into_iter().filter(|f| self.field_value(*f) != other.field_value(*f)).collect()
    }

    pub fn apply(&mut self, update: StateUpdate) {
        match update {
            StateUpdate::UserIntent(v) => self.user_intent = Some(v),
            StateUpdate::PdfType(v) => self.pdf_type = Some(v),
            StateUpdate::DocumentText(v) => self.document_text = Some(v),
            StateUpdate::DocumentLanguage(v) => self.document_language = Some(v),
            StateUpdate::UserLanguage(v) => self.user_language = Some(v),
            StateUpdate::TargetKeys(v) => self.target_keys = Some(v),
            StateUpdate::TranslatedTargetKeys(v) => self.translated_target_keys = Some(v),
            StateUpdate::ExtractedKvps(v) => self.extracted_kvps = Some(v),
            StateUpdate::TranslatedKvps(v) => self.translated_kvps = Some(v),
            StateUpdate::QaQuestion(v) => self.qa_question = Some(v),
            StateUpdate::QaAnswer(v) => self.qa_answer = Some(v),
            StateUpdate::TranslatedAnswer(v) => self.translated_answer = Some(v),
            StateUpdate::VerificationResult(v) => self.verification_result = Some(v),
        }
    }

    /// Keys to extract in the document's language: translated keys when present.
    pub fn extraction_keys(&self) -> Option<&Vec<String>> {
        self.translated_target_keys.as_ref().or(self.target_keys.as_ref())
    }

    pub fn languages_differ(&self) -> bool {
        matches!((self.document_language, self.user_language), (Some(d), Some(u)) if d != u)
    }

    pub fn is_verified(&self) -> bool {
        self.verification_result.as_ref().is_some_and(|v| v.verified)
    }
}
