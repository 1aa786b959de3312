//! Per-document KVP scoring: flat keys (validity, key coverage, value similarity normalized
//! over a fixed twelve-key baseline) and path-wise scoring of nested values.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::clean::clean_json_value;
use super::flatten::{flatten_json, scalar_text};
use super::{bleu, clean_json, exact_match, normalize_value, rouge_l};
use crate::annotations::value_text;
use crate::schema::Language;

/// Number of target keys every prediction is expected to contain.
pub const EXPECTED_KEYS: usize = 12;
/// Added to the key-match denominator.
pub const KEY_MATCH_EPSILON: f64 = 1e-9;

/// Scores for one (document, language) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalScores {
    pub doc_name: String,
    pub language: Language,
    pub valid: u8,
    pub key_match: f64,
    pub em: f64,
    pub bleu: f64,
    pub rouge: f64,
}

impl EvalScores {
    pub fn zero(doc_name: &str, language: Language) -> Self {
        Self { doc_name: doc_name.to_string(), language, valid: 0, key_match: 0.0, em: 0.0, bleu: 0.0, rouge: 0.0 }
    }
}

/// Exact match, BLEU and ROUGE-L of two values after normalization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ValueScores {
    pub em: f64,
    pub bleu: f64,
    pub rouge: f64,
}

impl ValueScores {
    fn add(&mut self, other: ValueScores) {
        self.em += other.em;
        self.bleu += other.bleu;
        self.rouge += other.rouge;
    }

    fn scaled(self, z: f64) -> ValueScores {
        ValueScores { em: self.em / z, bleu: self.bleu / z, rouge: self.rouge / z }
    }
}

pub fn value_scores(gt: &str, pred: &str, language: Language) -> ValueScores {
    let gt = normalize_value(gt, language);
    let pred = normalize_value(pred, language);
    ValueScores { em: f64::from(exact_match(&gt, &pred)), bleu: bleu(&gt, &pred), rouge: rouge_l(&gt, &pred) }
}

pub fn key_match_ratio(matched: usize, gt_keys: usize) -> f64 {
    matched as f64 / (gt_keys as f64 + KEY_MATCH_EPSILON)
}

/// Normalized key -> (original key, value), first occurrence winning.
fn index_keys<'a>(map: &'a Map<String, Value>, language: Language) -> HashMap<String, (&'a str, &'a Value)> {
    let mut out = HashMap::new();
    for (k, v) in map {
        out.entry(normalize_value(k, language)).or_insert((k.as_str(), v));
    }
    out
}

/// Scores a raw prediction against a key -> value ground truth. Nested values on either
/// side are compared as canonical JSON strings.
pub fn evaluate_kvp_document(doc_name: &str, pred_raw: &str, gt: &Map<String, Value>, language: Language) -> EvalScores {
    let Some(pred) = clean_json(pred_raw) else {
        return EvalScores::zero(doc_name, language);
    };
    evaluate_kvp_parsed(doc_name, &pred, gt, language)
}

pub fn evaluate_kvp_parsed(doc_name: &str, pred: &Map<String, Value>, gt: &Map<String, Value>, language: Language) -> EvalScores {
    let pred_index = index_keys(pred, language);
    let gt_index = index_keys(gt, language);

    let mut totals = ValueScores::default();
    let mut matched = 0usize;
    // Iterate the ground truth in its own order so float sums are reproducible.
    for (k, gt_value) in gt {
        let norm = normalize_value(k, language);
        if gt_index.get(&norm).map(|(orig, _)| *orig) != Some(k.as_str()) {
            continue;
        }
        if let Some((_, pred_value)) = pred_index.get(&norm) {
            matched += 1;
            totals.add(value_scores(&value_text(gt_value), &value_text(pred_value), language));
        }
    }

    let z = matched.max(EXPECTED_KEYS) as f64;
    let scores = totals.scaled(z);
    EvalScores {
        doc_name: doc_name.to_string(),
        language,
        valid: 1,
        key_match: key_match_ratio(matched, gt_index.len()),
        em: scores.em,
        bleu: scores.bleu,
        rouge: scores.rouge,
    }
}

/// Score of one aligned path inside a nested value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathScore {
    pub path: String,
    pub scores: ValueScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedKeyScores {
    pub key: String,
    pub parsed: bool,
    pub em: f64,
    pub bleu: f64,
    pub rouge: f64,
    pub matched: Vec<PathScore>,
    pub gt_paths: usize,
    pub pred_paths: usize,
    /// Ground-truth paths with no identically named predicted path.
    pub missing: Vec<String>,
}

impl NestedKeyScores {
    fn unparsed(key: &str) -> Self {
        Self {
            key: key.to_string(),
            parsed: false,
            em: 0.0,
            bleu: 0.0,
            rouge: 0.0,
            matched: Vec::new(),
            gt_paths: 0,
            pred_paths: 0,
            missing: Vec::new(),
        }
    }
}

/// Parses a nested value given either as a JSON string or as an already-parsed object.
pub fn parse_nested(v: &Value) -> Option<Value> {
    match v {
        Value::Object(_) => Some(v.clone()),
        Value::String(s) => clean_json_value(s).filter(Value::is_object),
        _ => None,
    }
}

/// Path-wise scoring of a nested key. Both sides must parse as JSON objects, otherwise all
/// scores are zero. Only identically named paths are compared; totals are divided by
/// `max(|matched|, 1)`.
pub fn evaluate_nested_key(pred_val: &str, gt_val: &str, key: &str, language: Language) -> NestedKeyScores {
    let pred = clean_json_value(pred_val).filter(Value::is_object);
    let gt = clean_json_value(gt_val).filter(Value::is_object);
    match (pred, gt) {
        (Some(p), Some(g)) => evaluate_nested_values(&p, &g, key, language),
        _ => NestedKeyScores::unparsed(key),
    }
}

pub fn evaluate_nested_values(pred: &Value, gt: &Value, key: &str, language: Language) -> NestedKeyScores {
    let pred_flat = flatten_json(pred, key);
    let gt_flat = flatten_json(gt, key);
    let pred_lookup: HashMap<&str, &Value> = pred_flat.iter().rev().map(|(p, v)| (p.as_str(), v)).collect();

    let mut totals = ValueScores::default();
    let mut matched = Vec::new();
    let mut missing = Vec::new();
    for (path, gt_value) in &gt_flat {
        match pred_lookup.get(path.as_str()) {
            Some(pred_value) => {
                let s = value_scores(&scalar_text(gt_value), &scalar_text(pred_value), language);
                totals.add(s);
                matched.push(PathScore { path: path.clone(), scores: s });
            }
            None => missing.push(path.clone()),
        }
    }
    let z = matched.len().max(1) as f64;
    let scores = totals.scaled(z);
    NestedKeyScores {
        key: key.to_string(),
        parsed: true,
        em: scores.em,
        bleu: scores.bleu,
        rouge: scores.rouge,
        matched,
        gt_paths: gt_flat.len(),
        pred_paths: pred_flat.len(),
        missing,
    }
}
