//! Prompt templates. Builders are pure functions of their inputs.

mod baseline;
mod planner;
mod tasks;

pub use baseline::{baseline_kvp_prompt, baseline_qa_prompt, BaselineMode};
pub use planner::{build_planner_prompt, PlannerPromptOptions, DEFAULT_EXCERPT_CHARS, DEFAULT_REASONING_WINDOW, DOCUMENT_LANGUAGE_UNKNOWN};
pub use tasks::{extraction_rules, intent_prompt, task_prompt, TaskKind};

/// Response schema block shared by the planner and recovery prompts.
pub const DECISION_SCHEMA: &str = r#"{
  "reasoning": "...",
  "need_tool": true/false,
  "tool": "...",
  "tool_input": ...
}"#;

/// Prompt issued once after the planner answered with something that is not a decision.
/// The failed planner prompt is repeated so the model can re-evaluate the state.
pub fn recovery_prompt(context: &str, raw: &str) -> String {
    format!(
        "The previous response from the planner could not be parsed as valid JSON.\n\
         You must recover from the failure, re-evaluate the current state, and decide the next best action.\n\n\
         Previous response:\n{raw}\n\n\
         Planner context:\n{context}\n\n\
         Respond in valid JSON format:\n{DECISION_SCHEMA}\n"
    )
}
