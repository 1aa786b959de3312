//! Model backends, accounting, prompt templates and planner-decision parsing.

mod backend;
mod decision;
mod gateway;
#[cfg(feature = "http")]
mod http;
mod ledger;
pub mod prompts;
mod scripted;

pub use backend::{Completion, CompletionRequest, LlmBackend, LlmError};
pub use decision::{parse_planner_decision, recover_malformed, ParseError, PlannerDecision, RecoveryError};
pub use gateway::{Gateway, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE};
#[cfg(feature = "http")]
pub use http::HttpBackend;
pub use ledger::{
    estimate_tokens, ledger_report, render_ledger_table, LedgerEntry, LedgerReport, Pricing, UsageLedger, REPORT_COLUMNS,
};
pub use scripted::{ScriptEntry, ScriptErrorKind, ScriptedBackend};
