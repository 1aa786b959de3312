//! Batch evaluation over prediction files: dispatches flat (fixed-schema), nested
//! (open-schema) and QA scoring, zero-pads missing or failed documents, and writes the
//! CSV / JSON outputs.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::aggregate::{macro_aggregate, macro_aggregate_qa, MacroSummary, QaMacroSummary};
use super::errors::{ErrorLog, ErrorRecord, ErrorStage};
use super::kvp::{evaluate_kvp_parsed, evaluate_nested_key, EvalScores, NestedKeyScores, KEY_MATCH_EPSILON};
use super::qa::{evaluate_qa, QaEvaluation, QaKey};
use super::{clean_json, normalize_value};
use crate::annotations::{document_names, value_text, Answer, KvpAnnotation, QaItem};
use crate::par::{self, Mode};
use crate::schema::Language;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("failed to read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("failed to parse {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: expected a JSON object mapping document names to raw outputs")]
    NotAMap { path: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Write(#[from] std::io::Error),
}

/// Raw model output per document, kept unparsed so cleaning happens at evaluation time.
pub type Predictions = BTreeMap<String, String>;

fn read_value(path: &Path) -> Result<Value, HarnessError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: display.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: display, source })
}

/// Reads a `doc_name -> raw output` map. Non-string outputs are re-serialized.
pub fn read_predictions(path: &Path) -> Result<Predictions, HarnessError> {
    match read_value(path)? {
        Value::Object(map) => Ok(map
            .into_iter()
            .map(|(k, v)| {
                let raw = match v {
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                (k, raw)
            })
            .collect()),
        _ => Err(HarnessError::NotAMap { path: path.display().to_string() }),
    }
}

/// Ground truth of one document in one language: key -> value in annotation order.
pub fn ground_truth_map(anns: &[KvpAnnotation], doc_name: &str, language: Language) -> Map<String, Value> {
    anns.iter()
        .filter(|a| a.doc_name == doc_name)
        .map(|a| (a.key(language).to_string(), a.value(language).clone()))
        .collect()
}

/// Nested-key scores of one document and language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedRow {
    pub doc_name: String,
    pub language: Language,
    pub scores: NestedKeyScores,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KvpEvaluation {
    /// One row per (document, language), flat scoring over the twelve keys.
    pub fixed: Vec<EvalScores>,
    /// Per nested key scores (empty unless nested scoring was requested).
    pub nested: Vec<NestedRow>,
    /// One row per (document, language) summarizing its nested keys.
    pub open: Vec<EvalScores>,
    pub errors: Vec<ErrorRecord>,
}

/// Fixed-schema, nested and open-schema groups of the macro averages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub fixed_schema: MacroSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub open_schema: Option<MacroSummary>,
    pub errors: usize,
}

impl KvpEvaluation {
    pub fn summary(&self) -> EvaluationSummary {
        EvaluationSummary {
            fixed_schema: macro_aggregate(&self.fixed),
            open_schema: (!self.open.is_empty()).then(|| macro_aggregate(&self.open)),
            errors: self.errors.len(),
        }
    }
}

struct DocResult {
    fixed: EvalScores,
    nested: Vec<NestedRow>,
    open: Option<EvalScores>,
}

/// Scores every annotated document in every language that has a prediction file.
/// Documents missing from a prediction file get an all-zero row and an error record.
pub fn evaluate_kvp_predictions(
    anns: &[KvpAnnotation],
    predictions: &[(Language, Predictions)],
    nested: bool,
    mode: Mode,
) -> KvpEvaluation {
    let docs = document_names(anns);
    let jobs: Vec<(Language, &Predictions, &str)> = predictions
        .iter()
        .flat_map(|(lang, preds)| docs.iter().map(move |d| (*lang, preds, d.as_str())))
        .collect();

    let log = ErrorLog::new();
    let results = par::map(mode, &jobs, |&(lang, preds, doc)| {
        let gt = ground_truth_map(anns, doc, lang);
        evaluate_one(doc, lang, preds.get(doc).map(String::as_str), &gt, nested, &log)
    });

    let mut out = KvpEvaluation::default();
    for r in results {
        out.fixed.push(r.fixed);
        out.nested.extend(r.nested);
        out.open.extend(r.open);
    }
    out.errors = log.into_records();
    out
}

fn evaluate_one(
    doc: &str,
    lang: Language,
    raw: Option<&str>,
    gt: &Map<String, Value>,
    nested: bool,
    log: &ErrorLog,
) -> DocResult {
    let nested_keys: Vec<&String> = gt.iter().filter(|(_, v)| v.is_object()).map(|(k, _)| k).collect();
    let parsed = match raw {
        None => {
            log.push(ErrorRecord::new(doc, lang, ErrorStage::Agent, "missing prediction"));
            None
        }
        Some(raw) => {
            let parsed = clean_json(raw);
            if parsed.is_none() {
                log.push(ErrorRecord::new(doc, lang, ErrorStage::Parse, "prediction is not valid JSON").with_raw(raw));
            }
            parsed
        }
    };

    let Some(pred) = parsed else {
        let nested_rows: Vec<NestedRow> = if nested {
            nested_keys
                .iter()
                .map(|k| NestedRow {
                    doc_name: doc.to_string(),
                    language: lang,
                    scores: evaluate_nested_key("", "", k, lang),
                })
                .collect()
        } else {
            Vec::new()
        };
        let open = (nested && !nested_keys.is_empty()).then(|| EvalScores::zero(doc, lang));
        return DocResult { fixed: EvalScores::zero(doc, lang), nested: nested_rows, open };
    };

    let fixed = evaluate_kvp_parsed(doc, &pred, gt, lang);
    if !nested || nested_keys.is_empty() {
        return DocResult { fixed, nested: Vec::new(), open: None };
    }

    let pred_by_key: HashMap<String, &Value> = pred.iter().map(|(k, v)| (normalize_value(k, lang), v)).collect();
    let rows: Vec<NestedRow> = nested_keys
        .iter()
        .map(|k| {
            let pred_text = pred_by_key.get(&normalize_value(k, lang)).map(|v| value_text(v)).unwrap_or_default();
            let scores = evaluate_nested_key(&pred_text, &value_text(&gt[k.as_str()]), k, lang);
            if !scores.parsed {
                log.push(
                    ErrorRecord::new(doc, lang, ErrorStage::Parse, format!("nested value of {k:?} missing or not a JSON object"))
                        .with_raw(pred_text),
                );
            }
            NestedRow { doc_name: doc.to_string(), language: lang, scores }
        })
        .collect();
    let open = Some(open_schema_row(doc, lang, &rows));
    DocResult { fixed, nested: rows, open }
}

/// Summary of the nested keys of one document: path coverage over all nested keys and the
/// mean of their value scores.
pub fn open_schema_row(doc: &str, lang: Language, rows: &[NestedRow]) -> EvalScores {
    if rows.is_empty() {
        return EvalScores::zero(doc, lang);
    }
    let n = rows.len() as f64;
    let matched: usize = rows.iter().map(|r| r.scores.matched.len()).sum();
    let gt_paths: usize = rows.iter().map(|r| r.scores.gt_paths).sum();
    EvalScores {
        doc_name: doc.to_string(),
        language: lang,
        valid: 1,
        key_match: matched as f64 / (gt_paths as f64 + KEY_MATCH_EPSILON),
        em: rows.iter().map(|r| r.scores.em).sum::<f64>() / n,
        bleu: rows.iter().map(|r| r.scores.bleu).sum::<f64>() / n,
        rouge: rows.iter().map(|r| r.scores.rouge).sum::<f64>() / n,
    }
}

/// One predicted QA answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPrediction {
    pub doc_name: String,
    pub user_language: Language,
    pub question: String,
    pub answer: Answer,
}

/// Reads QA predictions given as a JSON array of records.
pub fn read_qa_predictions(path: &Path) -> Result<Vec<QaPrediction>, HarnessError> {
    let display = path.display().to_string();
    serde_json::from_value(read_value(path)?).map_err(|source| HarnessError::Json { path: display, source })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QaRun {
    pub evaluation: QaEvaluation,
    pub summary: QaMacroSummary,
    pub errors: Vec<ErrorRecord>,
}

/// Scores QA predictions; unanswered questions count as empty answers and are logged.
pub fn evaluate_qa_predictions(preds: &[QaPrediction], gt: &[QaItem]) -> QaRun {
    let map: HashMap<QaKey, Answer> = preds
        .iter()
        .map(|p| {
            (QaKey { doc_name: p.doc_name.clone(), language: p.user_language, question: p.question.clone() }, p.answer.clone())
        })
        .collect();
    let evaluation = evaluate_qa(&map, gt);
    let errors = evaluation
        .rows
        .iter()
        .filter(|r| !r.answered)
        .map(|r| ErrorRecord::new(&r.doc_name, r.language, ErrorStage::Agent, "missing prediction").with_question(r.key.clone()))
        .collect();
    let summary = macro_aggregate_qa(&evaluation.averages);
    QaRun { evaluation, summary, errors }
}

/// Writes rows with a header, one CSV line per serialized record.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-document score CSV `(doc_name, language, valid, key_match, em, bleu, rouge)`.
/// An empty input still produces the header.
pub fn write_scores_csv<W: Write>(rows: &[EvalScores], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["doc_name", "language", "valid", "key_match", "em", "bleu", "rouge"])?;
    for r in rows {
        w.write_record([
            r.doc_name.clone(),
            r.language.code().to_string(),
            r.valid.to_string(),
            r.key_match.to_string(),
            r.em.to_string(),
            r.bleu.to_string(),
            r.rouge.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct NestedCsvRow<'a> {
    doc_name: &'a str,
    language: &'a str,
    key: &'a str,
    parsed: bool,
    matched_paths: usize,
    gt_paths: usize,
    pred_paths: usize,
    em: f64,
    bleu: f64,
    rouge: f64,
}

pub fn write_nested_csv<W: Write>(rows: &[NestedRow], out: W) -> Result<(), HarnessError> {
    let flat: Vec<NestedCsvRow> = rows
        .iter()
        .map(|r| NestedCsvRow {
            doc_name: &r.doc_name,
            language: r.language.code(),
            key: &r.scores.key,
            parsed: r.scores.parsed,
            matched_paths: r.scores.matched.len(),
            gt_paths: r.scores.gt_paths,
            pred_paths: r.scores.pred_paths,
            em: r.scores.em,
            bleu: r.scores.bleu,
            rouge: r.scores.rouge,
        })
        .collect();
    write_csv(&flat, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn anns() -> Vec<KvpAnnotation> {
        let mut out = Vec::new();
        for doc in ["a.pdf", "b.pdf"] {
            out.push(KvpAnnotation {
                doc_name: doc.into(),
                doc_lang: "de".into(),
                key_en: "Manufacturer".into(),
                key_de: "Hersteller".into(),
                value_en: json!("Company x, Switzerland"),
                value_de: json!("Firma x, Schweiz"),
            });
            out.push(KvpAnnotation {
                doc_name: doc.into(),
                doc_lang: "de".into(),
                key_en: "Declared Performance".into(),
                key_de: "Erklärte Leistung".into(),
                value_en: json!({"Reaction to fire": "Class A1"}),
                value_de: json!({"Brandverhalten": "Klasse A1"}),
            });
        }
        out
    }

    fn self_predictions(anns: &[KvpAnnotation], lang: Language) -> Predictions {
        document_names(anns)
            .into_iter()
            .map(|d| {
                let gt = ground_truth_map(anns, &d, lang);
                (d, Value::Object(gt).to_string())
            })
            .collect()
    }

    #[test]
    fn ground_truth_as_prediction_scores_perfectly() {
        let anns = anns();
        let preds = vec![(Language::De, self_predictions(&anns, Language::De))];
        let run = evaluate_kvp_predictions(&anns, &preds, true, Mode::Sequential);
        assert!(run.errors.is_empty());
        assert_eq!(run.fixed.len(), 2);
        assert!(run.nested.iter().all(|r| r.scores.em == 1.0));
        assert!(run.open.iter().all(|r| r.em == 1.0 && r.rouge == 1.0));
    }

    #[test]
    fn missing_document_is_zero_padded_and_logged() {
        let anns = anns();
        let mut preds = self_predictions(&anns, Language::En);
        preds.remove("b.pdf");
        let run = evaluate_kvp_predictions(&anns, &[(Language::En, preds)], false, Mode::Sequential);
        assert_eq!(run.fixed[1], EvalScores::zero("b.pdf", Language::En));
        assert_eq!(run.errors.len(), 1);
        assert_eq!(run.errors[0].doc_name, "b.pdf");
        assert_eq!(run.errors[0].stage, ErrorStage::Agent);
    }

    #[test]
    fn scores_csv_has_fixed_columns() {
        let mut buf = Vec::new();
        write_scores_csv(&[EvalScores::zero("a.pdf", Language::De)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "doc_name,language,valid,key_match,em,bleu,rouge");
        assert_eq!(text.lines().nth(1).unwrap(), "a.pdf,de,0,0,0,0,0");
    }

    #[test]
    fn unanswered_questions_are_logged() {
        let gt = vec![QaItem {
            doc_name: "a.pdf".into(),
            user_language: Language::En,
            parent_key: "Manufacturer".into(),
            key: "Manufacturer".into(),
            value: "Company x".into(),
            question: "Who is the Manufacturer?".into(),
            normalized_key: None,
        }];
        let run = evaluate_qa_predictions(&[], &gt);
        assert_eq!(run.errors.len(), 1);
        assert_eq!(run.summary.global.em, 0.0);
    }
}
