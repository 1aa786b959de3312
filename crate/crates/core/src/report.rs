//! Markdown run reports: the cost/runtime table plus score summaries.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::llm::{ledger_report, render_ledger_table, LedgerReport, UsageLedger};
use crate::metrics::harness::EvaluationSummary;
use crate::metrics::{MacroSummary, QaMacroSummary};

/// A score summary file as written by the evaluate command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScoreSummary {
    Kvp(EvaluationSummary),
    Qa(QaMacroSummary),
}

/// Ledger rows for each labelled run, plus a total row when there are several runs.
pub fn ledger_rows(ledgers: &[(String, UsageLedger)]) -> Vec<LedgerReport> {
    let mut rows: Vec<LedgerReport> = ledgers.iter().map(|(label, l)| ledger_report(label, l)).collect();
    if ledgers.len() > 1 {
        let total = UsageLedger::new(ledgers[0].1.pricing);
        for (_, l) in ledgers {
            total.merge(l);
        }
        rows.push(ledger_report("Total", &total));
    }
    rows
}

fn kvp_table(title: &str, summary: &MacroSummary, out: &mut String) {
    let _ = writeln!(out, "{title}\n\n| Language | Rows | Valid | Key Match | EM | BLEU | ROUGE-L |\n|---|---|---|---|---|---|---|");
    let rows = summary.per_language.iter().map(|(l, m)| (l.code().to_string(), m)).chain([("all".to_string(), &summary.global)]);
    for (lang, m) in rows {
        let _ = writeln!(
            out,
            "| {lang} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
            m.rows, m.valid, m.key_match, m.em, m.bleu, m.rouge
        );
    }
    out.push('\n');
}

fn qa_table(summary: &QaMacroSummary, out: &mut String) {
    out.push_str("| Language | Rows | EM | BLEU | ROUGE-L |\n|---|---|---|---|---|\n");
    let rows = summary.per_language.iter().map(|(l, m)| (l.code().to_string(), m)).chain([("all".to_string(), &summary.global)]);
    for (lang, m) in rows {
        let _ = writeln!(out, "| {lang} | {} | {:.4} | {:.4} | {:.4} |", m.rows, m.em, m.bleu, m.rouge);
    }
    out.push('\n');
}

/// Renders the report. Empty inputs still produce both sections.
pub fn render_report(ledgers: &[(String, UsageLedger)], scores: &[(String, ScoreSummary)]) -> String {
    let mut out = String::from("# Run report\n\n## Cost and runtime\n\n");
    out.push_str(&render_ledger_table(&ledger_rows(ledgers)));
    out.push_str("\n## Scores\n\n");
    if scores.is_empty() {
        out.push_str("No score summaries.\n");
    }
    for (label, summary) in scores {
        let _ = writeln!(out, "### {label}\n");
        match summary {
            ScoreSummary::Kvp(s) => {
                kvp_table("Fixed schema:", &s.fixed_schema, &mut out);
                if let Some(open) = &s.open_schema {
                    kvp_table("Open schema:", open, &mut out);
                }
                let _ = writeln!(out, "Logged errors: {}\n", s.errors);
            }
            ScoreSummary::Qa(s) => qa_table(s, &mut out),
        }
    }
    out
}
