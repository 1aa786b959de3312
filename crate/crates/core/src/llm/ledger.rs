//! Token, cost and runtime accounting for completion calls.

use std::fmt::Write as _;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// Prices in USD per million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pricing {
    pub input_per_1m: f64,
    pub output_per_1m: f64,
}

impl Default for Pricing {
    /// Placeholder rates; configure real ones per deployment.
    fn default() -> Self {
        Self { input_per_1m: 2.50, output_per_1m: 10.00 }
    }
}

impl Pricing {
    pub fn cost(&self, input_tokens: u64, output_tokens: u64) -> f64 {
        input_tokens as f64 * self.input_per_1m / 1e6 + output_tokens as f64 * self.output_per_1m / 1e6
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub call_site: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub wall_ms: u64,
}

/// Token estimate used when a backend reports no usage: one token per four characters.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// Append-only usage log, safe to share between concurrent runs.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct UsageLedger {
    entries: Mutex<Vec<LedgerEntry>>,
    pub pricing: Pricing,
    /// Wall-clock runtime of the whole job; when unset the per-call times are summed.
    #[serde(default)]
    runtime_ms: Mutex<Option<u64>>,
}

impl Clone for UsageLedger {
    fn clone(&self) -> Self {
        Self {
            entries: Mutex::new(self.entries()),
            pricing: self.pricing,
            runtime_ms: Mutex::new(*self.runtime_ms.lock().expect("ledger poisoned")),
        }
    }
}

impl UsageLedger {
    pub fn new(pricing: Pricing) -> Self {
        Self { pricing, ..Self::default() }
    }

    pub fn record(&self, entry: LedgerEntry) {
        self.entries.lock().expect("ledger poisoned").push(entry);
    }

    pub fn entries(&self) -> Vec<LedgerEntry> {
        self.entries.lock().expect("ledger poisoned").clone()
    }

    pub fn set_runtime_ms(&self, ms: u64) {
        *self.runtime_ms.lock().expect("ledger poisoned") = Some(ms);
    }

    /// Appends all entries of `other` and adds its runtime.
    pub fn merge(&self, other: &UsageLedger) {
        let total = self.runtime_ms() + other.runtime_ms();
        self.entries.lock().expect("ledger poisoned").extend(other.entries());
        *self.runtime_ms.lock().expect("ledger poisoned") = Some(total);
    }

    pub fn input_tokens(&self) -> u64 {
        self.entries.lock().expect("ledger poisoned").iter().map(|e| e.input_tokens).sum()
    }

    pub fn output_tokens(&self) -> u64 {
        self.entries.lock().expect("ledger poisoned").iter().map(|e| e.output_tokens).sum()
    }

    pub fn cost(&self) -> f64 {
        self.pricing.cost(self.input_tokens(), self.output_tokens())
    }

    pub fn runtime_ms(&self) -> u64 {
        let explicit = *self.runtime_ms.lock().expect("ledger poisoned");
        explicit.unwrap_or_else(|| self.entries.lock().expect("ledger poisoned").iter().map(|e| e.wall_ms).sum())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Totals of one ledger in the shape of a cost/runtime table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    #[serde(rename = "System")]
    pub label: String,
    #[serde(rename = "Calls")]
    pub calls: usize,
    #[serde(rename = "Input Tokens")]
    pub input_tokens: u64,
    #[serde(rename = "Output Tokens")]
    pub output_tokens: u64,
    #[serde(rename = "Total Tokens (M)")]
    pub total_tokens_m: f64,
    #[serde(rename = "Total Cost (USD)")]
    pub total_cost_usd: f64,
    #[serde(rename = "Runtime (min)")]
    pub runtime_min: f64,
}

pub const REPORT_COLUMNS: [&str; 4] = ["System", "Total Tokens (M)", "Total Cost (USD)", "Runtime (min)"];

pub fn ledger_report(label: &str, ledger: &UsageLedger) -> LedgerReport {
    let input_tokens = ledger.input_tokens();
    let output_tokens = ledger.output_tokens();
    LedgerReport {
        label: label.to_string(),
        calls: ledger.entries().len(),
        input_tokens,
        output_tokens,
        total_tokens_m: (input_tokens + output_tokens) as f64 / 1e6,
        total_cost_usd: ledger.pricing.cost(input_tokens, output_tokens),
        runtime_min: ledger.runtime_ms() as f64 / 60_000.0,
    }
}

/// Markdown table with one row per report.
pub fn render_ledger_table(rows: &[LedgerReport]) -> String {
    let mut out = format!("| {} |\n|{}\n", REPORT_COLUMNS.join(" | "), "---|".repeat(REPORT_COLUMNS.len()));
    for r in rows {
        let _ = writeln!(out, "| {} | {:.2} | {:.2} | {:.1} |", r.label, r.total_tokens_m, r.total_cost_usd, r.runtime_min);
    }
    out
}
