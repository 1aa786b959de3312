//! Ground-truth records for KVP extraction and QA, plus QA dataset generation.

mod generate;
mod sample;
mod stats;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::metrics::canonical_json;
use crate::schema::Language;

pub use generate::{generate_base_qa, generate_flat_qa, generate_nested_qa, generate_qa_dataset, QaGenError};
pub use sample::sample_eval_set;
pub use stats::{dataset_stats, DatasetStats};

/// One annotated key of one document, in both languages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KvpAnnotation {
    pub doc_name: String,
    #[serde(default = "default_doc_lang")]
    pub doc_lang: String,
    pub key_en: String,
    pub key_de: String,
    pub value_en: Value,
    pub value_de: Value,
}

fn default_doc_lang() -> String {
    "de".to_string()
}

impl KvpAnnotation {
    pub fn key(&self, lang: Language) -> &str {
        match lang {
            Language::En => &self.key_en,
            Language::De => &self.key_de,
        }
    }

    pub fn value(&self, lang: Language) -> &Value {
        match lang {
            Language::En => &self.value_en,
            Language::De => &self.value_de,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("failed to read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("failed to parse {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("annotation {doc_name:?}/{key:?}: value_en and value_de differ in kind")]
    KindMismatch { doc_name: String, key: String },
    #[error("duplicate annotation for {doc_name:?}/{key:?}")]
    Duplicate { doc_name: String, key: String },
}

/// Checks the dataset invariants: matching value kinds and unique `(doc_name, key_en)`.
pub fn validate_annotations(anns: &[KvpAnnotation]) -> Result<(), AnnotationError> {
    let mut seen = std::collections::HashSet::new();
    for a in anns {
        if a.value_en.is_object() != a.value_de.is_object() {
            return Err(AnnotationError::KindMismatch { doc_name: a.doc_name.clone(), key: a.key_en.clone() });
        }
        if !seen.insert((a.doc_name.as_str(), a.key_en.as_str())) {
            return Err(AnnotationError::Duplicate { doc_name: a.doc_name.clone(), key: a.key_en.clone() });
        }
    }
    Ok(())
}

pub fn read_kvp_file(path: &Path) -> Result<Vec<KvpAnnotation>, AnnotationError> {
    let anns: Vec<KvpAnnotation> = read_json(path)?;
    validate_annotations(&anns)?;
    Ok(anns)
}

pub fn read_qa_file(path: &Path) -> Result<Vec<QaItem>, AnnotationError> {
    read_json(path)
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, AnnotationError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| AnnotationError::Io { path: display.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| AnnotationError::Json { path: display, source })
}

/// Distinct document names in first-appearance order.
pub fn document_names(anns: &[KvpAnnotation]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for a in anns {
        if !names.iter().any(|n| n == &a.doc_name) {
            names.push(a.doc_name.clone());
        }
    }
    names
}

/// One generated question with its ground-truth answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub doc_name: String,
    pub user_language: Language,
    pub parent_key: String,
    pub key: String,
    pub value: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_key: Option<String>,
}

impl QaItem {
    /// Nested items address a sub-path of their parent key.
    pub fn is_nested(&self) -> bool {
        self.key != self.parent_key
    }
}

/// An answer is a single string or a list of strings; an empty string means "not found".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Text(String),
    List(Vec<String>),
}

impl Answer {
    /// Text used for comparison: list items joined with `"; "`.
    pub fn comparison_text(&self) -> String {
        match self {
            Answer::Text(s) => s.clone(),
            Answer::List(items) => items.join("; "),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Answer::Text(s) => s.trim().is_empty(),
            Answer::List(items) => items.iter().all(|s| s.trim().is_empty()),
        }
    }

    /// Interprets a JSON value returned by a model as an answer.
    pub fn from_json(v: &Value) -> Option<Answer> {
        match v {
            Value::String(s) => Some(Answer::Text(s.clone())),
            Value::Array(items) => Some(Answer::List(items.iter().map(value_text).collect())),
            Value::Null => Some(Answer::Text(String::new())),
            Value::Number(_) | Value::Bool(_) => Some(Answer::Text(v.to_string())),
            Value::Object(map) => map.get("answer").and_then(Answer::from_json),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Answer::Text(s) => Value::String(s.clone()),
            Answer::List(items) => Value::Array(items.iter().cloned().map(Value::String).collect()),
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.comparison_text())
    }
}

/// Flat text of an annotation value; nested values use canonical JSON.
pub fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        Value::Object(_) | Value::Array(_) => canonical_json(v),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn ann(doc: &str, key: &str, en: Value, de: Value) -> KvpAnnotation {
        KvpAnnotation {
            doc_name: doc.into(),
            doc_lang: "de".into(),
            key_en: key.into(),
            key_de: key.into(),
            value_en: en,
            value_de: de,
        }
    }

    #[test]
    fn kind_mismatch_rejected() {
        let anns = [ann("d", "Signature", json!({"a": "b"}), json!("b"))];
        assert!(matches!(validate_annotations(&anns), Err(AnnotationError::KindMismatch { .. })));
    }

    #[test]
    fn duplicates_rejected() {
        let anns = [ann("d", "Manufacturer", json!("x"), json!("x")), ann("d", "Manufacturer", json!("y"), json!("y"))];
        assert!(matches!(validate_annotations(&anns), Err(AnnotationError::Duplicate { .. })));
    }

    #[test]
    fn answer_json_forms() {
        assert_eq!(Answer::from_json(&json!(["a", "b"])).unwrap().comparison_text(), "a; b");
        assert_eq!(Answer::from_json(&json!({"answer": "x"})), Some(Answer::Text("x".into())));
        assert!(Answer::from_json(&json!("")).unwrap().is_empty());
    }

    #[test]
    fn qa_item_serializes_without_absent_tag() {
        let item = QaItem {
            doc_name: "doc001.pdf".into(),
            user_language: Language::En,
            parent_key: "Manufacturer".into(),
            key: "Manufacturer".into(),
            value: "Company x, Switzerland".into(),
            question: "Who is the Manufacturer?".into(),
            normalized_key: None,
        };
        let s = serde_json::to_string(&item).unwrap();
        assert!(!s.contains("normalized_key"));
        assert_eq!(serde_json::from_str::<QaItem>(&s).unwrap(), item);
    }
}
