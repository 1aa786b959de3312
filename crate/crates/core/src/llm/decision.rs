use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::backend::LlmError;
use super::gateway::Gateway;
use super::prompts::recovery_prompt;
use crate::metrics::{outermost_object, repair_escapes, strip_code_fences};

/// The planner's structured answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerDecision {
    pub reasoning: String,
    pub need_tool: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_input: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("planner response is not a valid decision: {reason}")]
pub struct ParseError {
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecoveryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Backend(#[from] LlmError),
}

fn parse_object(raw: &str) -> Option<Map<String, Value>> {
    let body = strip_code_fences(raw);
    let body = outermost_object(body).unwrap_or(body);
    match serde_json::from_str::<Value>(body) {
        Ok(Value::Object(m)) => Some(m),
        Ok(_) => None,
        Err(_) => match serde_json::from_str::<Value>(&repair_escapes(body)) {
            Ok(Value::Object(m)) => Some(m),
            _ => None,
        },
    }
}

/// Parses and validates a planner response. Extra fields are ignored; `tool` and
/// `tool_input` are dropped when `need_tool` is false.
pub fn parse_planner_decision(raw: &str) -> Result<PlannerDecision, ParseError> {
    let fail = |reason: &str| ParseError { reason: reason.to_string(), raw: raw.to_string() };
    let obj = parse_object(raw).ok_or_else(|| fail("not a JSON object"))?;
    let reasoning = match obj.get("reasoning") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(fail("\"reasoning\" must be a string")),
        None => return Err(fail("missing \"reasoning\"")),
    };
    let need_tool = obj.get("need_tool").and_then(Value::as_bool).ok_or_else(|| fail("\"need_tool\" must be a boolean"))?;
    if !need_tool {
        return Ok(PlannerDecision { reasoning, need_tool, tool: None, tool_input: None });
    }
    let tool = match obj.get("tool") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        _ => return Err(fail("need_tool is true but \"tool\" is missing")),
    };
    let tool_input = match obj.get("tool_input") {
        None | Some(Value::Null) => None,
        Some(v @ Value::Object(_)) => Some(v.clone()),
        Some(_) => return Err(fail("\"tool_input\" must be an object")),
    };
    Ok(PlannerDecision { reasoning, need_tool, tool: Some(tool), tool_input })
}

/// One recovery completion after a malformed planner response. `context` is the planner
/// prompt of the failed attempt.
pub fn recover_malformed(gateway: &Gateway, context: &str, raw: &str) -> Result<PlannerDecision, RecoveryError> {
    let prompt = recovery_prompt(context, raw);
    let completion = gateway.complete("planner/recovery", &prompt)?;
    Ok(parse_planner_decision(&completion.text)?)
}
