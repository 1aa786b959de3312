use std::fmt::Write;

use serde_json::Value;

use super::DECISION_SCHEMA;
use crate::agent::{AgentState, StateField, UserIntent};
use crate::tools::ToolDescriptor;

pub const DEFAULT_EXCERPT_CHARS: usize = 4000;
pub const DEFAULT_REASONING_WINDOW: usize = 5;
const LAST_OUTPUT_CHARS: usize = 600;

pub const DOCUMENT_LANGUAGE_UNKNOWN: &str =
    "Document language is still unknown. Call detect_language before extracting content.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannerPromptOptions {
    pub excerpt_chars: usize,
    pub reasoning_window: usize,
    /// Corrective notices for this cycle, e.g. after a misused or unavailable tool.
    pub adjustments: Vec<String>,
}

impl Default for PlannerPromptOptions {
    fn default() -> Self {
        Self { excerpt_chars: DEFAULT_EXCERPT_CHARS, reasoning_window: DEFAULT_REASONING_WINDOW, adjustments: Vec::new() }
    }
}

fn truncate(text: &str, max: usize) -> (&str, bool) {
    match text.char_indices().nth(max) {
        Some((i, _)) => (&text[..i], true),
        None => (text, false),
    }
}

fn or_unknown<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "unknown".into())
}

fn compact(v: &Value, max: usize) -> String {
    let s = serde_json::to_string(v).expect("value serializes");
    let (head, cut) = truncate(&s, max);
    if cut {
        format!("{head} ...")
    } else {
        head.to_string()
    }
}

fn question_translated(state: &AgentState) -> bool {
    state
        .tool_history
        .iter()
        .any(|r| r.success && r.tool_name == "translate_text" && r.changed_fields.contains(&StateField::QaQuestion))
}

fn context_block(state: &AgentState, opts: &PlannerPromptOptions, out: &mut String) {
    out.push_str("## Context\n");
    let _ = writeln!(out, "- User input: {}", state.user_input.trim());
    let _ = writeln!(out, "- User intent: {}", or_unknown(state.user_intent.map(UserIntent::as_str)));
    let _ = writeln!(out, "- PDF path: {}", state.pdf_path.display());
    let _ = writeln!(out, "- PDF type: {}", or_unknown(state.pdf_type));
    let _ = writeln!(out, "- Document language: {}", or_unknown(state.document_language));
    let _ = writeln!(out, "- User language: {}", or_unknown(state.user_language));
    match &state.target_keys {
        Some(k) => {
            let _ = writeln!(out, "- Target keys: {}", k.join(", "));
        }
        None => out.push_str("- Target keys: none\n"),
    }
    if let Some(k) = &state.translated_target_keys {
        let _ = writeln!(out, "- Translated target keys: {}", k.join(", "));
    }
    if let Some(q) = &state.qa_question {
        let _ = writeln!(out, "- Question: {q}");
    }
    match state.document_text.as_deref().filter(|t| !t.trim().is_empty()) {
        Some(text) => {
            let (excerpt, cut) = truncate(text, opts.excerpt_chars);
            let total = text.chars().count();
            if cut {
                let _ = writeln!(out, "- Document text (first {} of {total} characters, truncated):\n\"\"\"\n{excerpt}\n\"\"\"", opts.excerpt_chars);
            } else {
                let _ = writeln!(out, "- Document text ({total} characters):\n\"\"\"\n{excerpt}\n\"\"\"");
            }
        }
        None => out.push_str("- Document text: not extracted yet\n"),
    }
    if state.tool_history.is_empty() {
        out.push_str("- Tool history: none\n");
    } else {
        out.push_str("- Tool history:\n");
        for (i, r) in state.tool_history.iter().enumerate() {
            let outcome = if r.success { "ok" } else { "failed" };
            let (input, cut) = truncate(&r.input, 160);
            let _ = writeln!(out, "  {}. {} ({outcome}) input={input}{}", i + 1, r.tool_name, if cut { " ..." } else { "" });
        }
    }
    if let Some(tool) = &state.last_tool {
        let output = state.last_tool_output.as_ref().map(|v| compact(v, LAST_OUTPUT_CHARS)).unwrap_or_else(|| "none".into());
        let _ = writeln!(out, "- Last tool: {tool}; output: {output}");
    }
    if let Some(err) = &state.last_error {
        let _ = writeln!(out, "- Last error from {}: {}", err.tool, err.message);
        if let Some(raw) = &err.raw_output {
            let (raw, _) = truncate(raw, LAST_OUTPUT_CHARS);
            let _ = writeln!(out, "  Faulty output: {raw}");
        }
    }
    let start = state.reasoning_history.len().saturating_sub(opts.reasoning_window);
    if start < state.reasoning_history.len() {
        out.push_str("- Previous reasoning:\n");
        for r in &state.reasoning_history[start..] {
            let _ = writeln!(out, "  * {r}");
        }
    }
}

fn facts_block(state: &AgentState, out: &mut String) {
    out.push_str("\n## Extracted facts\n");
    let mut fact = |s: String| {
        out.push_str("- ");
        out.push_str(&s);
        out.push('\n');
    };
    match state.user_intent {
        Some(i) => fact(format!("User intent: {}", i.as_str())),
        None => fact("User intent is unknown. Call classify_intent.".into()),
    }
    match state.pdf_type {
        Some(t) => fact(format!("PDF type: {t} (confirmed)")),
        None => fact("PDF type is unknown. Call check_if_scanned.".into()),
    }
    if state.has(StateField::DocumentText) {
        fact("Document text is available".into());
    } else if let Some(t) = state.pdf_type {
        let tool = if t == crate::ingest::PdfType::Scanned { "extract_text_ocr" } else { "extract_text_direct" };
        fact(format!("Document text missing → call {tool}"));
    }
    if let Some(k) = &state.target_keys {
        fact(format!("Target keys: {}", k.join(", ")));
    }
    match state.document_language {
        Some(l) => fact(format!("Document language: {l}")),
        None => fact(DOCUMENT_LANGUAGE_UNKNOWN.into()),
    }
    match state.user_language {
        Some(l) => fact(format!("User language: {l}")),
        None => fact("User language is unknown. Call detect_language with target=\"user\".".into()),
    }
    let translate_needed = state.languages_differ();
    match state.user_intent {
        Some(UserIntent::KvpExtraction) => {
            if state.target_keys.is_none() {
                fact("Target keys missing → call get_user_target_keys".into());
            }
            if translate_needed && state.target_keys.is_some() && state.translated_target_keys.is_none() && state.extracted_kvps.is_none() {
                fact("Target keys not translated → call translate_text (kind=target_keys)".into());
            }
            if state.extracted_kvps.is_none() {
                fact("Extraction missing → call extract_key_values".into());
            }
            match &state.verification_result {
                None => fact("Verification missing → call verify_extraction".into()),
                Some(v) if !v.verified => fact(format!("Verification failed: {}", v.notes)),
                Some(_) => fact("Extraction verified".into()),
            }
            if translate_needed && state.extracted_kvps.is_some() && state.translated_kvps.is_none() {
                fact("Extracted values not translated → call translate_text (kind=kvps)".into());
            }
        }
        Some(UserIntent::QuestionAnswering) => {
            if translate_needed && state.qa_answer.is_none() && !question_translated(state) {
                fact("Question not translated into the document language → call translate_text (kind=question)".into());
            }
            if state.qa_answer.is_none() {
                fact("Answer missing → call answer_question".into());
            }
            match &state.verification_result {
                None => fact("Verification missing → call verify_extraction".into()),
                Some(v) if !v.verified => fact(format!("Verification failed: {}", v.notes)),
                Some(_) => fact("Answer verified".into()),
            }
            if translate_needed && state.qa_answer.is_some() && state.translated_answer.is_none() {
                fact("Answer not translated → call translate_text (kind=answer)".into());
            }
        }
        None => {}
    }
}

fn adjustments_block(state: &AgentState, opts: &PlannerPromptOptions, out: &mut String) {
    out.push_str("\n## Dynamic adjustments\n");
    out.push_str("- Do not repeat a tool such as extract_text_direct or extract_key_values when its input and the context are unchanged.\n");
    if state.pdf_type.is_some() {
        out.push_str("- The PDF type is already confirmed; do not call check_if_scanned again.\n");
    }
    for tool in &state.suppressed_tools {
        let _ = writeln!(out, "- {tool} was just called with identical input and is not available now; choose a different action.");
    }
    for note in &opts.adjustments {
        let _ = writeln!(out, "- {note}");
    }
}

const KVP_RULES: &str = "If user_intent is kvp_extraction, follow these steps:\n\
- Call get_user_target_keys if not yet available.\n";

const KVP_SAME_LANGUAGE: &str = "- Extract key-value pairs with extract_key_values.\n\
- Verify the extracted output with verify_extraction.\n";

const KVP_MISMATCH: &str = "- If document_language differs from user_language:\n\
  * Translate target_keys.\n\
  * Extract key-value pairs.\n\
  * Verify the extracted output.\n\
  * Translate the extracted_kvps.\n";

const QA_RULES: &str = "If user_intent is question_answering, follow these steps:\n";

const QA_SAME_LANGUAGE: &str = "- Answer the question with answer_question.\n\
- Verify the answer with verify_extraction.\n";

const QA_MISMATCH: &str = "- If document_language differs from user_language:\n\
  * Translate the user question into the document language.\n\
  * Answer the question.\n\
  * Verify the answer.\n\
  * Translate the answer into the user language.\n";

fn rules_block(state: &AgentState, out: &mut String) {
    out.push_str(
        "\n## Decision rules\n\
         - Identify user_intent if missing.\n\
         - Detect the PDF type, then extract the document text with the matching tool.\n\
         - Determine document and user language.\n\
         - If a model rejects noisy OCR text, call sanitize_ocr_text and retry.\n\
         - When the verified result is available, set need_tool=false so the responder can return it.\n\
         - Avoid redundant tool calls unless input or context has changed.\n\n",
    );
    let mismatch = state.languages_differ();
    let unknown_languages = state.document_language.is_none() || state.user_language.is_none();
    let kvp = state.user_intent != Some(UserIntent::QuestionAnswering);
    let qa = state.user_intent != Some(UserIntent::KvpExtraction);
    if kvp {
        out.push_str(KVP_RULES);
        if mismatch || unknown_languages {
            out.push_str(KVP_MISMATCH);
        }
        if !mismatch {
            out.push_str(if unknown_languages { "- Otherwise:\n" } else { "" });
            out.push_str(KVP_SAME_LANGUAGE);
        }
    }
    if qa {
        out.push_str(QA_RULES);
        if mismatch || unknown_languages {
            out.push_str(QA_MISMATCH);
        }
        if !mismatch {
            out.push_str(if unknown_languages { "- Otherwise:\n" } else { "" });
            out.push_str(QA_SAME_LANGUAGE);
        }
    }
}

fn tools_block(offered: &[&ToolDescriptor], out: &mut String) {
    out.push_str("\n## Available tools\n");
    if offered.is_empty() {
        out.push_str(
            "No tool can run in the current state. You must respond with need_tool=false; \
             the responder will return the verified result or report that none exists.\n",
        );
        return;
    }
    for tool in offered {
        let inputs: Vec<String> = tool
            .input_schema
            .iter()
            .map(|f| format!("{} ({}{})", f.name, f.kind.label(), if f.required { "" } else { ", optional" }))
            .collect();
        let _ = writeln!(
            out,
            "- {} [{}]: {} Inputs: {}. Missing inputs are filled from the state.",
            tool.name,
            tool.intent.as_str(),
            tool.description,
            inputs.join(", ")
        );
    }
}

/// Planner prompt for one cycle: context, facts, adjustments, decision rules, the
/// offered tools and the strict output contract.
pub fn build_planner_prompt(state: &AgentState, offered: &[&ToolDescriptor], opts: &PlannerPromptOptions) -> String {
    let mut out = String::from(
        "You are the planner of an agent that extracts key-value pairs from and answers questions about \
         Declaration of Performance (DoP) documents. Decide the single next action.\n\n",
    );
    context_block(state, opts, &mut out);
    facts_block(state, &mut out);
    adjustments_block(state, opts, &mut out);
    rules_block(state, &mut out);
    tools_block(offered, &mut out);
    out.push_str("\n## Output\nRespond with a strict JSON object and nothing else:\n");
    out.push_str(DECISION_SCHEMA);
    out.push_str(
        "\n\"reasoning\" explains the decision; \"need_tool\" is a boolean; \"tool\" names one of the available tools \
         when need_tool is true; \"tool_input\" is an object with the tool inputs or null.\n",
    );
    out
}
