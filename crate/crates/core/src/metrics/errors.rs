use std::io::Write;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::schema::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorStage {
    Ingest,
    Agent,
    Parse,
    Metric,
}

/// A failure that caused (or explains) a zero-padded score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub doc_name: String,
    pub language: Language,
    pub stage: ErrorStage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_key: Option<String>,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_output: Option<String>,
}

impl ErrorRecord {
    pub fn new(doc_name: &str, language: Language, stage: ErrorStage, message: impl Into<String>) -> Self {
        Self {
            doc_name: doc_name.to_string(),
            language,
            stage,
            question_key: None,
            message: message.into(),
            raw_output: None,
        }
    }

    pub fn with_raw(mut self, raw: impl Into<String>) -> Self {
        self.raw_output = Some(raw.into());
        self
    }

    pub fn with_question(mut self, key: impl Into<String>) -> Self {
        self.question_key = Some(key.into());
        self
    }
}

/// Append-only sink shared by concurrent evaluations.
#[derive(Debug, Default)]
pub struct ErrorLog {
    records: Mutex<Vec<ErrorRecord>>,
}

impl ErrorLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, record: ErrorRecord) {
        self.records.lock().expect("error log poisoned").push(record);
    }

    pub fn extend(&self, records: impl IntoIterator<Item = ErrorRecord>) {
        self.records.lock().expect("error log poisoned").extend(records);
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("error log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<ErrorRecord> {
        self.records.lock().expect("error log poisoned").clone()
    }

    pub fn into_records(self) -> Vec<ErrorRecord> {
        self.records.into_inner().expect("error log poisoned")
    }
}

/// Writes records as JSON Lines.
pub fn write_error_jsonl<W: Write>(records: &[ErrorRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
