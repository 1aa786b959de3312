//! The planner, executor and responder nodes over a shared [`AgentState`].

mod runtime;
mod state;
mod trace;

pub use runtime::{
    detect_unproductive_loop, executor_step, fallback_message, planner_step, responder_step, run_agent, Agent, AgentConfig,
    AgentOutcome, DEFAULT_LOOP_WINDOW, DEFAULT_MAX_STEPS, STEP_BUDGET_EXHAUSTED,
};
pub use state::{
    AgentState, AgentStatus, LastError, StateField, StateUpdate, ToolInvocationRecord, UserIntent, VerificationResult,
};
pub use trace::{write_trace_jsonl, Clock, MonotonicClock, Node, TickClock, TraceRecord};
