//! Single-pass zero-shot baselines: one completion per document (KVP) or per question
//! (QA), outputs stored raw for later cleaning and scoring.

use std::path::{Path, PathBuf};

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::annotations::{Answer, QaItem};
use crate::ingest::{DocumentAdapters, ExtractMode, IngestError};
use crate::llm::prompts::{baseline_kvp_prompt, baseline_qa_prompt, BaselineMode};
use crate::llm::Gateway;
use crate::metrics::harness::{Predictions, QaPrediction};
use crate::metrics::{clean_json_value, strip_code_fences, ErrorRecord, ErrorStage};
use crate::par::{self, Mode};
use crate::schema::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineTask {
    Kvp,
    Qa,
}

/// Document input of a baseline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    /// Native text with page-level OCR recovery.
    Text,
    /// Pre-rendered page images attached to the request.
    Vision,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KvpBaselineRun {
    pub predictions: Predictions,
    pub errors: Vec<ErrorRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QaBaselineRun {
    pub predictions: Vec<QaPrediction>,
    pub errors: Vec<ErrorRecord>,
}

pub fn doc_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

enum DocInput {
    Text(String),
    Images(Vec<String>),
}

fn load(adapters: &DocumentAdapters, doc: &Path, modality: Modality) -> Result<DocInput, IngestError> {
    match modality {
        Modality::Text => adapters.extract_text(doc, ExtractMode::Direct).map(DocInput::Text),
        Modality::Vision => {
            let pages = adapters.page_images(doc)?;
            if pages.is_empty() {
                return Err(IngestError::unreadable(doc, "no rendered page images"));
            }
            pages
                .iter()
                .map(|p| std::fs::read(p).map(|b| base64::engine::general_purpose::STANDARD.encode(b)).map_err(|e| IngestError::unreadable(p, e)))
                .collect::<Result<_, _>>()
                .map(DocInput::Images)
        }
    }
}

const VISION_PLACEHOLDER: &str = "(the document is provided as the attached page images)";

/// Runs the KVP baseline over `docs`; failures are logged per document and the run continues.
pub fn run_kvp_baseline(
    gateway: &Gateway,
    adapters: &DocumentAdapters,
    docs: &[PathBuf],
    prompt_mode: BaselineMode,
    language: Language,
    modality: Modality,
    mode: Mode,
) -> KvpBaselineRun {
    let results = par::map(mode, docs, |doc| {
        let name = doc_name(doc);
        let (prompt, images) = match load(adapters, doc, modality) {
            Ok(DocInput::Text(text)) => (baseline_kvp_prompt(prompt_mode, language, &text), Vec::new()),
            Ok(DocInput::Images(images)) => (baseline_kvp_prompt(prompt_mode, language, VISION_PLACEHOLDER), images),
            Err(e) => return (name.clone(), Err(ErrorRecord::new(&name, language, ErrorStage::Ingest, e.to_string()))),
        };
        let result = gateway
            .complete_with_images("baseline/kvp", &prompt, images)
            .map(|c| c.text)
            .map_err(|e| ErrorRecord::new(&name, language, ErrorStage::Agent, e.to_string()));
        (name, result)
    });
    let mut run = KvpBaselineRun::default();
    for (name, result) in results {
        match result {
            Ok(raw) => {
                run.predictions.insert(name, raw);
            }
            Err(e) => run.errors.push(e),
        }
    }
    run
}

/// Reads a QA baseline response the same way the agent reads answers.
pub fn parse_baseline_answer(raw: &str) -> Answer {
    if let Some(a) = clean_json_value(raw).as_ref().and_then(Answer::from_json) {
        return a;
    }
    let text = strip_code_fences(raw).trim();
    let text = text.strip_prefix("Answer:").or_else(|| text.strip_prefix("Antwort:")).unwrap_or(text).trim();
    Answer::Text(text.trim_matches('"').trim().to_string())
}

/// Runs the QA baseline for every item whose document is in `docs`. Each document is
/// loaded once; its questions are answered one completion each.
pub fn run_qa_baseline(
    gateway: &Gateway,
    adapters: &DocumentAdapters,
    docs: &[PathBuf],
    items: &[QaItem],
    modality: Modality,
    mode: Mode,
) -> QaBaselineRun {
    let results = par::map(mode, docs, |doc| {
        let name = doc_name(doc);
        let questions: Vec<&QaItem> = items.iter().filter(|q| q.doc_name == name).collect();
        let mut preds = Vec::new();
        let mut errors = Vec::new();
        if questions.is_empty() {
            return (preds, errors);
        }
        let input = match load(adapters, doc, modality) {
            Ok(input) => input,
            Err(e) => {
                for lang in Language::ALL.into_iter().filter(|l| questions.iter().any(|q| q.user_language == *l)) {
                    errors.push(ErrorRecord::new(&name, lang, ErrorStage::Ingest, e.to_string()));
                }
                return (preds, errors);
            }
        };
        for q in questions {
            let (prompt, images) = match &input {
                DocInput::Text(text) => (baseline_qa_prompt(q.user_language, &q.question, Some(text)), Vec::new()),
                DocInput::Images(images) => (baseline_qa_prompt(q.user_language, &q.question, None), images.clone()),
            };
            match gateway.complete_with_images("baseline/qa", &prompt, images) {
                Ok(c) => preds.push(QaPrediction {
                    doc_name: name.clone(),
                    user_language: q.user_language,
                    question: q.question.clone(),
                    answer: parse_baseline_answer(&c.text),
                }),
                Err(e) => errors.push(ErrorRecord::new(&name, q.user_language, ErrorStage::Agent, e.to_string()).with_question(q.key.clone())),
            }
        }
        (preds, errors)
    });
    let mut run = QaBaselineRun::default();
    for (p, e) in results {
        run.predictions.extend(p);
        run.errors.extend(e);
    }
    run
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TextFileExtractor;
    use crate::llm::{ScriptedBackend, UsageLedger};
    use std::sync::Arc;

    fn setup(backend: Arc<ScriptedBackend>) -> (Gateway, DocumentAdapters) {
        (Gateway::new(backend, Arc::new(UsageLedger::default())), DocumentAdapters::new(Arc::new(TextFileExtractor)))
    }

    #[test]
    fn failures_are_logged_and_the_run_continues() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        std::fs::write(&a, "Hersteller: ACME GmbH, Musterstadt").unwrap();
        let backend = Arc::new(ScriptedBackend::new());
        backend.push_text("baseline/kvp", "```json\n{\"Hersteller\": \"ACME GmbH\"}\n```");
        let (gw, adapters) = setup(backend.clone());
        let docs = vec![a, dir.path().join("missing.txt")];
        let run = run_kvp_baseline(&gw, &adapters, &docs, BaselineMode::TaskSchema, Language::De, Modality::Text, Mode::Sequential);
        assert_eq!(run.predictions.len(), 1);
        assert!(run.predictions["a.txt"].starts_with("```json"));
        assert_eq!(run.errors.len(), 1);
        assert_eq!(run.errors[0].stage, ErrorStage::Ingest);
        let prompt = &backend.requests()[0].prompt;
        assert!(prompt.contains("Zielschlüssel (Pflichtfelder)"));
        assert!(prompt.contains("ACME GmbH, Musterstadt"));
    }

    #[test]
    fn qa_answers_are_parsed() {
        assert_eq!(parse_baseline_answer("Answer: \"Company x\""), Answer::Text("Company x".into()));
        assert_eq!(parse_baseline_answer("[\"a\", \"b\"]"), Answer::List(vec!["a".into(), "b".into()]));
    }

    #[test]
    fn vision_requires_rendered_pages() {
        let dir = tempfile::tempdir().unwrap();
        let doc = dir.path().join("d.pdf");
        std::fs::write(&doc, "x").unwrap();
        let pages = dir.path().join("pages/d");
        std::fs::create_dir_all(&pages).unwrap();
        std::fs::write(pages.join("page-1.png"), [0u8, 1, 2]).unwrap();
        let backend = Arc::new(ScriptedBackend::new());
        backend.push_text("baseline/kvp", "{}");
        let (gw, adapters) = setup(backend.clone());
        let adapters = adapters.with_rendered_pages(dir.path().join("pages"));
        let run = run_kvp_baseline(&gw, &adapters, &[doc], BaselineMode::Task, Language::En, Modality::Vision, Mode::Sequential);
        assert!(run.errors.is_empty());
        assert_eq!(backend.requests()[0].images, ["AAEC"]);
    }
}
