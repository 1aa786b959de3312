//! The default tool set: deterministic document utilities and model-backed tools.

use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Value};

use super::keys::parse_target_keys;
use super::{FieldKind, FieldSpec, RegistryError, ToolDescriptor, ToolError, ToolInput, ToolIntent, ToolRegistry};
use crate::agent::{AgentState, StateField, StateUpdate, UserIntent, VerificationResult};
use crate::annotations::Answer;
use crate::ingest::{detect_language, sanitize_ocr_text, DocumentAdapters, ExtractMode, PdfType};
use crate::llm::prompts::{intent_prompt, task_prompt, TaskKind};
use crate::llm::Gateway;
use crate::metrics::{clean_json, clean_json_value, strip_code_fences};
use crate::schema::Language;

const BOTH: [PdfType; 2] = [PdfType::Scanned, PdfType::Text];

fn param_str<'a>(raw: &'a Value, name: &str) -> Option<&'a str> {
    raw.get(name).and_then(Value::as_str).map(str::trim).filter(|s| !s.is_empty())
}

fn param_list(raw: &Value, name: &str) -> Vec<String> {
    raw.get(name)
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
        .unwrap_or_default()
}

fn input(pairs: impl IntoIterator<Item = (&'static str, Value)>) -> ToolInput {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn state_text(state: &AgentState) -> Result<String, ToolError> {
    match state.document_text.as_deref() {
        Some(t) if !t.trim().is_empty() => Ok(t.to_string()),
        _ => Err(ToolError::validation("document_text is empty; extract the document text first")),
    }
}

fn state_doc_language(state: &AgentState) -> Result<Language, ToolError> {
    state.document_language.ok_or_else(|| ToolError::validation("document_language is unknown; call detect_language first"))
}

fn str_field<'a>(input: &'a ToolInput, name: &str) -> &'a str {
    input.get(name).and_then(Value::as_str).unwrap_or_default()
}

fn call_site(tool: &str) -> String {
    format!("tool/{tool}")
}

/// Deterministic tools backed by the document adapters.
pub fn text_tools(adapters: Arc<DocumentAdapters>) -> Vec<ToolDescriptor> {
    let scan = adapters.clone();
    let direct = adapters.clone();
    let ocr = adapters;
    vec![
        ToolDescriptor {
            name: "check_if_scanned".into(),
            intent: ToolIntent::ModalityDetection,
            compatible_pdf_types: BOTH.to_vec(),
            requires_previous_output: false,
            required_fields: vec![],
            required_any: vec![],
            description: "Classifies the PDF as text-based or scanned from its native text layer.".into(),
            input_schema: vec![FieldSpec::required("pdf_path", FieldKind::String)],
            updates: vec![StateField::PdfType],
            normalize_input: normalize_pdf_path,
            execute: Arc::new(move |input| {
                let kind = scan.check_if_scanned(&PathBuf::from(str_field(input, "pdf_path")))?;
                Ok(json!(kind.as_str()))
            }),
            postprocess: |out, _| {
                let kind: PdfType = out.as_str().unwrap_or_default().parse().map_err(|_| ToolError::runtime("unknown pdf type"))?;
                Ok(vec![StateUpdate::PdfType(kind)])
            },
        },
        text_extraction_tool(
            "extract_text_direct",
            PdfType::Text,
            "Extracts the native text layer page by page; unusable pages are recovered with OCR.",
            ExtractMode::Direct,
            direct,
        ),
        text_extraction_tool("extract_text_ocr", PdfType::Scanned, "Runs OCR over every page of a scanned PDF.", ExtractMode::Ocr, ocr),
        ToolDescriptor {
            name: "detect_language".into(),
            intent: ToolIntent::LanguageDetection,
            compatible_pdf_types: BOTH.to_vec(),
            requires_previous_output: false,
            required_fields: vec![],
            required_any: vec![],
            description: "Detects whether a text is German or English. target=\"document\" sets document_language, target=\"user\" sets user_language from the user request.".into(),
            input_schema: vec![FieldSpec::required("target", FieldKind::String), FieldSpec::required("text", FieldKind::String)],
            updates: vec![StateField::DocumentLanguage, StateField::UserLanguage],
            normalize_input: normalize_detect_language,
            execute: Arc::new(|input| {
                let lang = detect_language(str_field(input, "text"))?;
                Ok(json!({"target": str_field(input, "target"), "language": lang.code()}))
            }),
            postprocess: |out, _| {
                let lang: Language = out["language"].as_str().unwrap_or_default().parse().map_err(|e| ToolError::runtime(format!("{e}")))?;
                Ok(vec![match out["target"].as_str() {
                    Some("user") => StateUpdate::UserLanguage(lang),
                    _ => StateUpdate::DocumentLanguage(lang),
                }])
            },
        },
        ToolDescriptor {
            name: "get_user_target_keys".into(),
            intent: ToolIntent::KeyParsing,
            compatible_pdf_types: BOTH.to_vec(),
            requires_previous_output: false,
            required_fields: vec![],
            required_any: vec![],
            description: "Parses the key paths the user asked for; defaults to the full twelve-key schema. Optional input: keys (list of key paths).".into(),
            input_schema: vec![
                FieldSpec::required("user_input", FieldKind::String),
                FieldSpec::optional("keys", FieldKind::StringList),
                FieldSpec::required("language", FieldKind::String),
            ],
            updates: vec![StateField::TargetKeys],
            normalize_input: |state, raw| {
                let lang = state.user_language.or(state.document_language).unwrap_or(Language::En);
                let mut m = input([("user_input", json!(state.user_input)), ("language", json!(lang.code()))]);
                let keys = param_list(raw, "keys");
                if !keys.is_empty() {
                    m.insert("keys".into(), json!(keys));
                }
                Ok(m)
            },
            execute: Arc::new(|input| {
                let lang: Language = str_field(input, "language").parse().unwrap_or(Language::En);
                let explicit: Vec<String> = input
                    .get("keys")
                    .and_then(Value::as_array)
                    .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
                    .unwrap_or_default();
                Ok(json!(parse_target_keys(str_field(input, "user_input"), &explicit, lang)))
            }),
            postprocess: |out, _| {
                let keys: Vec<String> = serde_json::from_value(out.clone()).map_err(|e| ToolError::runtime(e.to_string()))?;
                Ok(vec![StateUpdate::TargetKeys(keys)])
            },
        },
        ToolDescriptor {
            name: "sanitize_ocr_text".into(),
            intent: ToolIntent::Sanitization,
            compatible_pdf_types: BOTH.to_vec(),
            requires_previous_output: true,
            required_fields: vec![StateField::DocumentText],
            required_any: vec![],
            description: "Removes control and zero-width characters and collapses punctuation runs in the document text.".into(),
            input_schema: vec![FieldSpec::required("document_text", FieldKind::String)],
            updates: vec![StateField::DocumentText],
            normalize_input: |state, _| Ok(input([("document_text", json!(state_text(state)?))])),
            execute: Arc::new(|input| Ok(json!(sanitize_ocr_text(str_field(input, "document_text"))))),
            postprocess: |out, _| Ok(vec![StateUpdate::DocumentText(out.as_str().unwrap_or_default().to_string())]),
        },
    ]
}

fn normalize_pdf_path(state: &AgentState, _raw: &Value) -> Result<ToolInput, ToolError> {
    Ok(input([("pdf_path", json!(state.pdf_path.to_string_lossy()))]))
}

fn text_extraction_tool(
    name: &str,
    pdf_type: PdfType,
    description: &str,
    mode: ExtractMode,
    adapters: Arc<DocumentAdapters>,
) -> ToolDescriptor {
    ToolDescriptor {
        name: name.into(),
        intent: ToolIntent::TextExtraction,
        compatible_pdf_types: vec![pdf_type],
        requires_previous_output: true,
        required_fields: vec![StateField::PdfType],
        required_any: vec![],
        description: description.into(),
        input_schema: vec![FieldSpec::required("pdf_path", FieldKind::String)],
        updates: vec![StateField::DocumentText],
        normalize_input: normalize_pdf_path,
        execute: Arc::new(move |input| {
            let text = adapters.extract_text(&PathBuf::from(str_field(input, "pdf_path")), mode)?;
            if text.trim().is_empty() {
                return Err(ToolError::runtime("extraction produced no text"));
            }
            Ok(json!(text))
        }),
        postprocess: |out, _| Ok(vec![StateUpdate::DocumentText(out.as_str().unwrap_or_default().to_string())]),
    }
}

fn normalize_detect_language(state: &AgentState, raw: &Value) -> Result<ToolInput, ToolError> {
    let target = match param_str(raw, "target") {
        Some(t @ ("document" | "user")) => t,
        Some(other) => return Err(ToolError::validation(format!("target must be \"document\" or \"user\", got {other:?}"))),
        None if state.has(StateField::DocumentText) && state.document_language.is_none() => "document",
        None if state.user_language.is_none() => "user",
        None => "document",
    };
    let text = if target == "document" { state_text(state)? } else { state.user_input.clone() };
    Ok(input([("target", json!(target)), ("text", json!(text))]))
}

/// Model-backed tools sharing one gateway.
pub fn llm_tools(gateway: Gateway) -> Vec<ToolDescriptor> {
    let classify = gateway.clone();
    let extract = gateway.clone();
    let answer = gateway.clone();
    let verify = gateway.clone();
    let translate = gateway;
    vec![
        ToolDescriptor {
            name: "classify_intent".into(),
            intent: ToolIntent::IntentClassification,
            compatible_pdf_types: BOTH.to_vec(),
            requires_previous_output: false,
            required_fields: vec![],
            required_any: vec![],
            description: "Classifies the user request as kvp_extraction or question_answering.".into(),
            input_schema: vec![FieldSpec::required("user_input", FieldKind::String)],
            updates: vec![StateField::UserIntent, StateField::QaQuestion],
            normalize_input: |state, _| Ok(input([("user_input", json!(state.user_input))])),
            execute: Arc::new(move |input| {
                let raw = classify.complete(&call_site("classify_intent"), &intent_prompt(str_field(input, "user_input")))?.text;
                let label = clean_json(&raw)
                    .and_then(|m| m.get("intent").and_then(Value::as_str).map(str::to_string))
                    .unwrap_or_else(|| strip_code_fences(&raw).trim().trim_matches('"').to_string());
                let intent = UserIntent::parse(&label).ok_or_else(|| ToolError::parse("response names no known intent", raw.clone()))?;
                Ok(json!({"intent": intent.as_str()}))
            }),
            postprocess: |out, state| {
                let intent = out["intent"].as_str().and_then(UserIntent::parse).ok_or_else(|| ToolError::runtime("missing intent"))?;
                let mut updates = vec![StateUpdate::UserIntent(intent)];
                if intent == UserIntent::QuestionAnswering && !state.has(StateField::QaQuestion) {
                    updates.push(StateUpdate::QaQuestion(state.user_input.trim().to_string()));
                }
                Ok(updates)
            },
        },
        ToolDescriptor {
            name: "extract_key_values".into(),
            intent: ToolIntent::KvpExtraction,
            compatible_pdf_types: BOTH.to_vec(),
            requires_previous_output: true,
            required_fields: vec![StateField::DocumentText, StateField::DocumentLanguage, StateField::TargetKeys],
            required_any: vec![],
            description: "Extracts the target keys from the document text as a JSON object, in the document language.".into(),
            input_schema: vec![
                FieldSpec::required("document_text", FieldKind::String),
                FieldSpec::required("keys", FieldKind::StringList),
                FieldSpec::required("language", FieldKind::String),
            ],
            updates: vec![StateField::ExtractedKvps],
            normalize_input: |state, raw| {
                let text = state_text(state)?;
                let lang = state_doc_language(state)?;
                let mut keys = param_list(raw, "keys");
                if keys.is_empty() {
                    keys = state.extraction_keys().cloned().unwrap_or_default();
                }
                if keys.is_empty() {
                    return Err(ToolError::validation("no target keys; call get_user_target_keys first"));
                }
                Ok(input([("document_text", json!(text)), ("keys", json!(keys)), ("language", json!(lang.code()))]))
            },
            execute: Arc::new(move |input| {
                let prompt = task_prompt(TaskKind::Kvp, str_field(input, "language"), &Value::Object(input.clone()))
                    .map_err(|e| ToolError::validation(e.to_string()))?;
                let raw = extract.complete(&call_site("extract_key_values"), &prompt)?.text;
                clean_json(&raw).map(Value::Object).ok_or_else(|| ToolError::parse("extraction is not a JSON object", raw))
            }),
            postprocess: |out, _| match out {
                Value::Object(m) => Ok(vec![StateUpdate::ExtractedKvps(m.clone())]),
                _ => Err(ToolError::runtime("extraction output is not an object")),
            },
        },
        ToolDescriptor {
            name: "answer_question".into(),
            intent: ToolIntent::QuestionAnswering,
            compatible_pdf_types: BOTH.to_vec(),
            requires_previous_output: true,
            required_fields: vec![StateField::DocumentText, StateField::QaQuestion, StateField::DocumentLanguage],
            required_any: vec![],
            description: "Answers qa_question from the document text with a string or a list of strings (\"\" when not found).".into(),
            input_schema: vec![
                FieldSpec::required("document_text", FieldKind::String),
                FieldSpec::required("question", FieldKind::String),
                FieldSpec::required("language", FieldKind::String),
            ],
            updates: vec![StateField::QaAnswer],
            normalize_input: |state, _| {
                let text = state_text(state)?;
                let lang = state_doc_language(state)?;
                let question = state
                    .qa_question
                    .as_deref()
                    .map(str::trim)
                    .filter(|q| !q.is_empty())
                    .ok_or_else(|| ToolError::validation("qa_question is empty"))?;
                Ok(input([("document_text", json!(text)), ("question", json!(question)), ("language", json!(lang.code()))]))
            },
            execute: Arc::new(move |input| {
                let prompt = task_prompt(TaskKind::Qa, str_field(input, "language"), &Value::Object(input.clone()))
                    .map_err(|e| ToolError::validation(e.to_string()))?;
                let raw = answer.complete(&call_site("answer_question"), &prompt)?.text;
                Ok(parse_answer(&raw).to_json())
            }),
            postprocess: |out, _| {
                let answer = Answer::from_json(out).ok_or_else(|| ToolError::runtime("answer is not text"))?;
                Ok(vec![StateUpdate::QaAnswer(answer)])
            },
        },
        ToolDescriptor {
            name: "verify_extraction".into(),
            intent: ToolIntent::Verification,
            compatible_pdf_types: BOTH.to_vec(),
            requires_previous_output: true,
            required_fields: vec![StateField::DocumentText],
            required_any: vec![StateField::ExtractedKvps, StateField::QaAnswer],
            description: "Checks that the extracted key-values or the answer are complete and grounded in the document text.".into(),
            input_schema: vec![
                FieldSpec::required("document_text", FieldKind::String),
                FieldSpec::required("extracted", FieldKind::Any),
                FieldSpec::optional("question", FieldKind::String),
                FieldSpec::required("language", FieldKind::String),
            ],
            updates: vec![StateField::VerificationResult],
            normalize_input: normalize_verify,
            execute: Arc::new(move |input| {
                let prompt = task_prompt(TaskKind::Verify, str_field(input, "language"), &Value::Object(input.clone()))
                    .map_err(|e| ToolError::validation(e.to_string()))?;
                let raw = verify.complete(&call_site("verify_extraction"), &prompt)?.text;
                let obj = clean_json(&raw).ok_or_else(|| ToolError::parse("verification is not a JSON object", raw.clone()))?;
                let verified = match obj.get("verified") {
                    Some(Value::Bool(b)) => *b,
                    Some(Value::String(s)) if s.eq_ignore_ascii_case("true") => true,
                    Some(Value::String(s)) if s.eq_ignore_ascii_case("false") => false,
                    _ => return Err(ToolError::parse("verification lacks a boolean \"verified\"", raw)),
                };
                let notes = obj.get("notes").and_then(Value::as_str).unwrap_or_default();
                Ok(json!({"verified": verified, "notes": notes}))
            }),
            postprocess: |out, _| {
                let result: VerificationResult = serde_json::from_value(out.clone()).map_err(|e| ToolError::runtime(e.to_string()))?;
                Ok(vec![StateUpdate::VerificationResult(result)])
            },
        },
        ToolDescriptor {
            name: "translate_text".into(),
            intent: ToolIntent::Translation,
            compatible_pdf_types: BOTH.to_vec(),
            requires_previous_output: true,
            required_fields: vec![StateField::DocumentLanguage, StateField::UserLanguage],
            required_any: vec![StateField::TargetKeys, StateField::ExtractedKvps, StateField::QaAnswer, StateField::QaQuestion],
            description: "Translates state content. kind=\"target_keys\" or \"question\" go into the document language; kind=\"kvps\" or \"answer\" go into the user language.".into(),
            input_schema: vec![
                FieldSpec::required("kind", FieldKind::String),
                FieldSpec::required("content", FieldKind::Any),
                FieldSpec::required("target_language", FieldKind::String),
            ],
            updates: vec![
                StateField::TranslatedTargetKeys,
                StateField::TranslatedKvps,
                StateField::TranslatedAnswer,
                StateField::QaQuestion,
            ],
            normalize_input: normalize_translate,
            execute: Arc::new(move |input| {
                let kind = TranslateKind::parse(str_field(input, "kind")).ok_or_else(|| ToolError::validation("unknown translation kind"))?;
                let payload = json!({"content": input["content"], "content_kind": kind.as_str()});
                let prompt = task_prompt(TaskKind::Translate, str_field(input, "target_language"), &payload)
                    .map_err(|e| ToolError::validation(e.to_string()))?;
                let raw = translate.complete(&call_site("translate_text"), &prompt)?.text;
                let value = kind.parse_output(&raw)?;
                Ok(json!({"kind": kind.as_str(), "value": value}))
            }),
            postprocess: |out, _| {
                let kind = out["kind"].as_str().and_then(TranslateKind::parse).ok_or_else(|| ToolError::runtime("missing kind"))?;
                let value = &out["value"];
                let bad = || ToolError::runtime("translation output has the wrong shape");
                Ok(vec![match kind {
                    TranslateKind::TargetKeys => StateUpdate::TranslatedTargetKeys(serde_json::from_value(value.clone()).map_err(|_| bad())?),
                    TranslateKind::Kvps => StateUpdate::TranslatedKvps(value.as_object().cloned().ok_or_else(bad)?),
                    TranslateKind::Answer => StateUpdate::TranslatedAnswer(Answer::from_json(value).ok_or_else(bad)?),
                    TranslateKind::Question => StateUpdate::QaQuestion(value.as_str().ok_or_else(bad)?.to_string()),
                }])
            },
        },
    ]
}

/// Reads a QA response: JSON strings and lists are unwrapped, anything else is taken as text.
fn parse_answer(raw: &str) -> Answer {
    if let Some(v) = clean_json_value(raw) {
        if let Some(a) = Answer::from_json(&v) {
            return a;
        }
    }
    let text = strip_code_fences(raw).trim();
    let text = text.strip_prefix('"').and_then(|t| t.strip_suffix('"')).unwrap_or(text);
    Answer::Text(text.trim().to_string())
}

fn normalize_verify(state: &AgentState, _raw: &Value) -> Result<ToolInput, ToolError> {
    let text = state_text(state)?;
    let kvps = state.extracted_kvps.as_ref().map(|m| Value::Object(m.clone()));
    let answer = state.qa_answer.as_ref().map(Answer::to_json);
    let (extracted, question) = match state.user_intent {
        Some(UserIntent::QuestionAnswering) => (answer, state.qa_question.clone()),
        Some(UserIntent::KvpExtraction) => (kvps, None),
        None => match kvps {
            Some(k) => (Some(k), None),
            None => (answer, state.qa_question.clone()),
        },
    };
    let extracted = extracted.ok_or_else(|| ToolError::validation("nothing to verify yet"))?;
    let lang = state.document_language.or(state.user_language).unwrap_or(Language::De);
    let mut m = input([("document_text", json!(text)), ("extracted", extracted), ("language", json!(lang.code()))]);
    if let Some(q) = question {
        m.insert("question".into(), json!(q));
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TranslateKind {
    TargetKeys,
    Kvps,
    Answer,
    Question,
}

impl TranslateKind {
    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "target_keys" | "keys" => Some(Self::TargetKeys),
            "kvps" | "extracted_kvps" => Some(Self::Kvps),
            "answer" | "qa_answer" => Some(Self::Answer),
            "question" | "qa_question" => Some(Self::Question),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Self::TargetKeys => "target_keys",
            Self::Kvps => "kvps",
            Self::Answer => "answer",
            Self::Question => "question",
        }
    }

    fn parse_output(self, raw: &str) -> Result<Value, ToolError> {
        let parsed = clean_json_value(raw);
        let fail = |what: &str| ToolError::parse(format!("translation is not {what}"), raw);
        match self {
            Self::TargetKeys => match parsed {
                Some(Value::Array(items)) if !items.is_empty() && items.iter().all(Value::is_string) => Ok(Value::Array(items)),
                _ => Err(fail("a list of key strings")),
            },
            Self::Kvps => clean_json(raw).map(Value::Object).ok_or_else(|| fail("a JSON object")),
            Self::Answer => Ok(parse_answer(raw).to_json()),
            Self::Question => match parsed {
                Some(Value::String(s)) if !s.trim().is_empty() => Ok(Value::String(s)),
                Some(Value::Object(_) | Value::Array(_)) => Err(fail("a question string")),
                _ => match parse_answer(raw) {
                    Answer::Text(s) if !s.is_empty() => Ok(Value::String(s)),
                    _ => Err(fail("a question string")),
                },
            },
        }
    }
}

/// Picks the next pending translation for the active intent.
fn infer_translate_kind(state: &AgentState) -> Option<TranslateKind> {
    let qa = state.user_intent == Some(UserIntent::QuestionAnswering)
        || state.user_intent.is_none() && state.extracted_kvps.is_none() && state.target_keys.is_none();
    if qa {
        if state.qa_answer.is_some() {
            return Some(TranslateKind::Answer);
        }
        return state.has(StateField::QaQuestion).then_some(TranslateKind::Question);
    }
    if state.extracted_kvps.is_some() {
        return Some(TranslateKind::Kvps);
    }
    state.has(StateField::TargetKeys).then_some(TranslateKind::TargetKeys)
}

fn normalize_translate(state: &AgentState, raw: &Value) -> Result<ToolInput, ToolError> {
    let kind = match param_str(raw, "kind") {
        Some(k) => TranslateKind::parse(k).ok_or_else(|| ToolError::validation(format!("unknown translation kind {k:?}")))?,
        None => infer_translate_kind(state).ok_or_else(|| ToolError::validation("nothing to translate yet"))?,
    };
    let missing = || ToolError::validation(format!("no {} to translate", kind.as_str()));
    let (content, target) = match kind {
        TranslateKind::TargetKeys => (json!(state.target_keys.clone().ok_or_else(missing)?), state.document_language),
        TranslateKind::Question => (json!(state.qa_question.clone().ok_or_else(missing)?), state.document_language),
        TranslateKind::Kvps => (Value::Object(state.extracted_kvps.clone().ok_or_else(missing)?), state.user_language),
        TranslateKind::Answer => (state.qa_answer.as_ref().ok_or_else(missing)?.to_json(), state.user_language),
    };
    let target = target.ok_or_else(|| ToolError::validation("target language is unknown; call detect_language first"))?;
    Ok(input([("kind", json!(kind.as_str())), ("content", content), ("target_language", json!(target.code()))]))
}

/// Builds the registry from the deterministic and model-backed sets.
pub fn register_default_tools(gateway: Gateway, adapters: Arc<DocumentAdapters>) -> Result<ToolRegistry, RegistryError> {
    ToolRegistry::from_sets([text_tools(adapters), llm_tools(gateway)])
}
