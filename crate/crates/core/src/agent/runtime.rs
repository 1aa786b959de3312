use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use super::state::{AgentState, AgentStatus, LastError, ToolInvocationRecord, UserIntent};
use super::trace::{Clock, MonotonicClock, Node, TraceRecord};
use crate::llm::prompts::{build_planner_prompt, PlannerPromptOptions};
use crate::llm::{parse_planner_decision, recover_malformed, Gateway, PlannerDecision, RecoveryError};
use crate::schema::Language;
use crate::tools::{invoke, ToolRegistry};

pub const DEFAULT_MAX_STEPS: usize = 25;
pub const DEFAULT_LOOP_WINDOW: usize = 2;
pub const STEP_BUDGET_EXHAUSTED: &str = "step budget exhausted";

const PLANNER: &str = "planner";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentConfig {
    pub max_steps: usize,
    pub loop_window: usize,
    pub prompt: PlannerPromptOptions,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self { max_steps: DEFAULT_MAX_STEPS, loop_window: DEFAULT_LOOP_WINDOW, prompt: PlannerPromptOptions::default() }
    }
}

/// Fixed message for runs that end without a verified result.
pub fn fallback_message(lang: Option<Language>) -> &'static str {
    match lang {
        Some(Language::De) => "Für dieses Dokument liegt noch kein verifiziertes Ergebnis vor.",
        _ => "No verified result is available for this document yet.",
    }
}

fn end(mut state: AgentState, reason: impl Into<String>) -> AgentState {
    let reason = reason.into();
    let mut message = fallback_message(state.user_language).to_string();
    if let Some(err) = &state.last_error {
        message.push_str(&format!(" Last error ({}): {}", err.tool, err.message));
    }
    state.fallback_message = Some(message);
    state.end_reason = Some(reason);
    state.selected_tool = None;
    state.selected_input = None;
    state.status = AgentStatus::End;
    state
}

fn planner_error(state: &mut AgentState, message: String, raw: Option<String>) {
    state.last_error = Some(LastError { tool: PLANNER.into(), message, raw_output: raw });
}

/// True when the last `window` invocations share tool and canonical input and none of
/// them changed the state.
pub fn detect_unproductive_loop(history: &[ToolInvocationRecord], window: usize) -> bool {
    let window = window.max(2);
    if history.len() < window {
        return false;
    }
    let tail = &history[history.len() - window..];
    let first = &tail[0];
    tail.iter()
        .all(|r| r.tool_name == first.tool_name && r.input == first.input && r.changed_fields.is_empty())
}

/// One planner cycle. Leaves the state in NEED_TOOL, RESPOND or END.
///
/// Safeguards: tools with missing inputs are not offered, an exact repeat of the last
/// invocation withholds that tool (choosing it anyway ends the run), a tool serving the
/// other task gets one corrective re-prompt, and the last tool error is part of the prompt.
pub fn planner_step(mut state: AgentState, registry: &ToolRegistry, gateway: &Gateway, config: &AgentConfig) -> AgentState {
    if state.status != AgentStatus::Plan {
        return state;
    }
    if state.step_count >= config.max_steps {
        return end(state, STEP_BUDGET_EXHAUSTED);
    }
    if detect_unproductive_loop(&state.tool_history, config.loop_window) {
        let tool = state.tool_history.last().map(|r| r.tool_name.clone()).unwrap_or_default();
        return end(state, format!("loop detected: {tool} repeated without effect"));
    }
    state.step_count += 1;

    let mut opts = config.prompt.clone();
    let mut recovered = false;
    let mut corrected = false;
    loop {
        let offered: Vec<_> =
            registry.compatible_with(&state).into_iter().filter(|t| !state.suppressed_tools.contains(&t.name)).collect();
        let prompt = build_planner_prompt(&state, &offered, &opts);
        let raw = match gateway.complete(PLANNER, &prompt) {
            Ok(c) => c.text,
            Err(e) => {
                planner_error(&mut state, format!("backend error: {e}"), None);
                return end(state, "planner backend unavailable");
            }
        };
        let decision: PlannerDecision = match parse_planner_decision(&raw) {
            Ok(d) => d,
            Err(_) if recovered => {
                planner_error(&mut state, "planner response could not be parsed as JSON".into(), Some(raw));
                return end(state, "planner output unparseable");
            }
            Err(_) => {
                recovered = true;
                match recover_malformed(gateway, &prompt, &raw) {
                    Ok(d) => d,
                    Err(RecoveryError::Parse(e)) => {
                        planner_error(&mut state, format!("recovery failed: {}", e.reason), Some(e.raw));
                        return end(state, "planner output unparseable");
                    }
                    Err(RecoveryError::Backend(e)) => {
                        planner_error(&mut state, format!("backend error: {e}"), None);
                        return end(state, "planner backend unavailable");
                    }
                }
            }
        };
        state.reasoning_history.push(decision.reasoning.clone());

        let Some(name) = decision.tool.filter(|_| decision.need_tool) else {
            if state.extracted_kvps.is_none() && state.qa_answer.is_none() && !state.has(super::StateField::DocumentText) && state.last_error.is_none() {
                planner_error(&mut state, "planner chose to respond before any content was available".into(), None);
            }
            state.selected_tool = None;
            state.selected_input = None;
            state.status = AgentStatus::Respond;
            return state;
        };
        let raw_input = decision.tool_input.unwrap_or_else(|| Value::Object(Map::new()));

        if state.suppressed_tools.contains(&name) {
            planner_error(&mut state, format!("{name} was selected again with unchanged state"), None);
            return end(state, format!("loop detected: {name} repeated with identical input"));
        }

        let correction = match registry.get(&name) {
            None => Some(format!("There is no tool named {name:?}. Choose one of the available tools or set need_tool=false.")),
            Some(tool) => match state.user_intent {
                Some(intent) if tool.intent.conflicts_with(intent) => {
                    if corrected {
                        planner_error(&mut state, format!("{name} serves {} but the user intent is {}", tool.intent.as_str(), intent.as_str()), None);
                        return end(state, format!("tool misuse: {name} conflicts with {}", intent.as_str()));
                    }
                    Some(format!(
                        "{name} serves {}, but the user intent is {}. Select a tool for {} instead.",
                        tool.intent.as_str(),
                        intent.as_str(),
                        intent.as_str()
                    ))
                }
                _ if !offered.iter().any(|t| t.name == name) => {
                    Some(format!("{name} cannot run yet because its required inputs are missing. Choose one of the available tools."))
                }
                _ => None,
            },
        };
        if let Some(note) = correction {
            if corrected {
                planner_error(&mut state, format!("{name} is not available in the current state"), None);
                return end(state, format!("invalid tool selection: {name}"));
            }
            corrected = true;
            opts.adjustments.push(note);
            continue;
        }

        let tool = registry.get(&name).expect("checked above");
        let key = tool.input_key(&state, &raw_input);
        let repeat = state.tool_history.last().is_some_and(|r| r.tool_name == name && r.input == key);
        if repeat {
            state.suppressed_tools.push(name);
            continue;
        }

        state.selected_tool = Some(name);
        state.selected_input = Some(raw_input);
        state.status = AgentStatus::NeedTool;
        return state;
    }
}

/// Runs the selected tool and folds its result into the state. Never fails: errors are
/// recorded in the history and in `last_error`, and control returns to the planner.
pub fn executor_step(mut state: AgentState, registry: &ToolRegistry, clock: &dyn Clock) -> AgentState {
    if state.status != AgentStatus::NeedTool {
        return state;
    }
    let name = state.selected_tool.take().unwrap_or_default();
    let raw = state.selected_input.take().unwrap_or_else(|| Value::Object(Map::new()));
    let planner_reasoning = state.reasoning_history.last().cloned().unwrap_or_default();
    state.status = AgentStatus::Plan;

    let Some(tool) = registry.get(&name) else {
        state.last_error = Some(LastError { tool: name.clone(), message: format!("unknown tool {name:?}"), raw_output: None });
        state.last_tool = Some(name);
        return state;
    };
    let input = tool.input_key(&state, &raw);
    let before = state.clone();
    let (output, success) = match invoke(tool, &state, &raw) {
        Ok(result) => {
            for update in result.updates {
                state.apply(update);
            }
            state.last_error = None;
            (result.output, true)
        }
        Err(e) => {
            state.last_error = Some(LastError {
                tool: name.clone(),
                message: format!("{}: {}", json!(e.kind).as_str().unwrap_or_default(), e.message),
                raw_output: e.raw_output.clone(),
            });
            (json!({"error": e.kind, "message": e.message}), false)
        }
    };
    let changed_fields = before.changed_fields(&state);
    if !changed_fields.is_empty() {
        state.suppressed_tools.clear();
    }
    state.tool_history.push(ToolInvocationRecord {
        tool_name: name.clone(),
        input,
        output: output.clone(),
        success,
        planner_reasoning,
        timestamp: clock.now_ms(),
        changed_fields,
    });
    state.last_tool = Some(name);
    state.last_tool_output = Some(output);
    state
}

fn effective_intent(state: &AgentState) -> Option<UserIntent> {
    state.user_intent.or_else(|| {
        if state.extracted_kvps.is_some() {
            Some(UserIntent::KvpExtraction)
        } else if state.qa_answer.is_some() {
            Some(UserIntent::QuestionAnswering)
        } else {
            None
        }
    })
}

/// Returns a verified result (translated form preferred) or hands control back.
pub fn responder_step(mut state: AgentState) -> AgentState {
    if state.status != AgentStatus::Respond {
        return state;
    }
    let result = match effective_intent(&state) {
        Some(UserIntent::KvpExtraction) => state
            .extracted_kvps
            .as_ref()
            .map(|kvps| Value::Object(state.translated_kvps.clone().unwrap_or_else(|| kvps.clone()))),
        Some(UserIntent::QuestionAnswering) => {
            state.qa_answer.as_ref().map(|a| state.translated_answer.as_ref().unwrap_or(a).to_json())
        }
        None => None,
    };
    match result {
        Some(answer) if state.is_verified() => {
            state.final_answer = Some(answer);
            state.status = AgentStatus::Success;
        }
        Some(_) => state.status = AgentStatus::Plan,
        None => {
            if !state.has(super::StateField::DocumentText) {
                state.fallback_message = Some(fallback_message(state.user_language).to_string());
            }
            state.status = AgentStatus::Plan;
        }
    }
    state
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentOutcome {
    pub final_answer: Option<Value>,
    pub status: AgentStatus,
    pub state: AgentState,
    pub trace: Vec<TraceRecord>,
}

impl AgentOutcome {
    pub fn succeeded(&self) -> bool {
        self.status == AgentStatus::Success
    }

    /// Final answer, or the fallback message for runs that ended without one.
    pub fn message(&self) -> String {
        match &self.final_answer {
            Some(Value::String(s)) => s.clone(),
            Some(v) => serde_json::to_string_pretty(v).expect("value serializes"),
            None => self.state.fallback_message.clone().unwrap_or_else(|| fallback_message(self.state.user_language).into()),
        }
    }
}

/// A configured agent. The registry is shared read-only across runs.
#[derive(Clone)]
pub struct Agent {
    pub registry: Arc<ToolRegistry>,
    pub gateway: Gateway,
    pub config: AgentConfig,
    pub clock: Arc<dyn Clock>,
}

impl Agent {
    pub fn new(registry: Arc<ToolRegistry>, gateway: Gateway, config: AgentConfig) -> Self {
        Self { registry, gateway, config, clock: Arc::new(MonotonicClock::default()) }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Drives the state graph until SUCCESS or END.
    pub fn run(&self, mut state: AgentState) -> AgentOutcome {
        let mut trace = Vec::new();
        if state.status.is_terminal() {
            state.status = AgentStatus::Plan;
        }
        while !state.status.is_terminal() {
            let before = state.status;
            let started = self.clock.now_ms();
            let (node, next) = match before {
                AgentStatus::Plan => (Node::Planner, planner_step(state, &self.registry, &self.gateway, &self.config)),
                AgentStatus::NeedTool => (Node::Executor, executor_step(state, &self.registry, self.clock.as_ref())),
                AgentStatus::Respond => (Node::Responder, responder_step(state)),
                AgentStatus::Success | AgentStatus::End => unreachable!("loop exits on terminal status"),
            };
            state = next;
            let (tool, success) = match node {
                Node::Executor => (state.last_tool.clone(), state.tool_history.last().map(|r| r.success)),
                Node::Planner => (state.selected_tool.clone(), None),
                Node::Responder => (None, None),
            };
            trace.push(TraceRecord {
                node,
                status_before: before,
                status_after: state.status,
                tool,
                success,
                elapsed_ms: self.clock.now_ms().saturating_sub(started),
            });
            if !before.can_transition(state.status) {
                state = end(state, format!("illegal transition {before} -> {}", trace.last().unwrap().status_after));
            }
        }
        AgentOutcome { final_answer: state.final_answer.clone(), status: state.status, state, trace }
    }
}

/// Runs the agent on a fresh state for `user_input` and `pdf_path`.
pub fn run_agent(user_input: &str, pdf_path: impl Into<PathBuf>, agent: &Agent) -> AgentOutcome {
    agent.run(AgentState::new(user_input, pdf_path))
}
