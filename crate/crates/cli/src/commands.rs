use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use serde_json::Value;

use dop_core::agent::{
    write_trace_jsonl, Agent, AgentConfig, AgentOutcome, AgentState, AgentStatus, Clock, LastError, MonotonicClock, TickClock,
    UserIntent,
};
use dop_core::annotations::{dataset_stats, generate_qa_dataset, read_kvp_file, read_qa_file, sample_eval_set, validate_annotations};
use dop_core::baseline::{doc_name, run_kvp_baseline, run_qa_baseline, Modality};
use dop_core::ingest::{detect_language, split_pages, DocumentAdapters, ExternalOcr, ExtractMode, SidecarOcr};
use dop_core::llm::prompts::BaselineMode;
use dop_core::llm::{Gateway, LlmBackend, ScriptedBackend, UsageLedger};
use dop_core::metrics::harness::{
    evaluate_kvp_predictions, evaluate_qa_predictions, read_predictions, read_qa_predictions, write_csv, write_nested_csv,
    write_scores_csv,
};
use dop_core::metrics::{write_error_jsonl, ErrorRecord, ErrorStage};
use dop_core::par::{self, Mode};
use dop_core::report::{render_report, ScoreSummary};
use dop_core::schema::Language;
use dop_core::tools::register_default_tools;

use crate::config::{BackendKind, RunConfig};
use crate::{AskArgs, BaselineArgs, EvaluateArgs, ExtractArgs, GenerateQaArgs, IngestArgs, ReportArgs, Task};

/// How a successful command finished; errors are reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// The agent stopped at END without a verified result.
    Ended,
}

pub fn parse_baseline_mode(s: &str) -> Result<BaselineMode, String> {
    match s.trim().to_ascii_uppercase().as_str() {
        "T" => Ok(BaselineMode::Task),
        "T+S" | "TS" => Ok(BaselineMode::TaskSchema),
        other => Err(format!("unknown baseline mode {other:?} (expected T or T+S)")),
    }
}

fn build_gateway(cfg: &RunConfig) -> Result<Gateway> {
    let backend: Arc<dyn LlmBackend> = match cfg.backend.kind {
        BackendKind::Scripted => {
            let path = cfg.backend.script.as_ref().ok_or_else(|| anyhow!("the scripted backend needs a script file (--script)"))?;
            Arc::new(ScriptedBackend::from_file(path)?)
        }
        BackendKind::Http => http_backend(cfg)?,
    };
    Ok(Gateway::new(backend, Arc::new(UsageLedger::new(cfg.pricing))))
}

#[cfg(feature = "http")]
fn http_backend(cfg: &RunConfig) -> Result<Arc<dyn LlmBackend>> {
    let key = std::env::var(&cfg.backend.api_key_env).ok();
    let timeout = std::time::Duration::from_secs(cfg.backend.timeout_secs);
    Ok(Arc::new(dop_core::llm::HttpBackend::new(&cfg.backend.base_url, &cfg.backend.model, key, timeout)?))
}

#[cfg(not(feature = "http"))]
fn http_backend(_cfg: &RunConfig) -> Result<Arc<dyn LlmBackend>> {
    anyhow::bail!("this build has no HTTP backend; rebuild with the `http` feature")
}

fn build_adapters(cfg: &RunConfig, mode: Mode) -> DocumentAdapters {
    let adapters = DocumentAdapters::default().with_cache(cfg.cache).with_mode(mode);
    match (&cfg.ocr_command, cfg.sidecar_ocr) {
        (Some(cmd), _) => adapters.with_ocr(Arc::new(ExternalOcr::new(cmd.clone()))),
        (None, true) => adapters.with_ocr(Arc::new(SidecarOcr)),
        (None, false) => adapters,
    }
}

/// Scripted replies are consumed in arrival order, so scripted runs stay sequential to keep
/// their outputs reproducible.
fn run_mode<R: Send>(cfg: &RunConfig, f: impl FnOnce(Mode) -> R + Send) -> R {
    if cfg.backend.kind == BackendKind::Scripted {
        return f(Mode::Sequential);
    }
    par::with_workers(cfg.workers, f)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn write_errors(path: &Path, records: &[ErrorRecord]) -> Result<()> {
    let mut out = create(path)?;
    write_error_jsonl(records, &mut out)?;
    out.flush()?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

#[derive(Debug, Serialize)]
struct RunResult<'a> {
    doc_name: String,
    status: AgentStatus,
    final_answer: Option<&'a Value>,
    /// Plain-text answer or fallback message; omitted when the answer is a JSON object.
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    end_reason: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    last_error: Option<&'a LastError>,
    tools: Vec<&'a str>,
    step_count: usize,
}

/// Runs the agent on one document and writes `<stem>.result.json`, `<stem>.trace.jsonl`
/// and `<stem>.ledger.json` into `out_dir`.
fn run_document(cfg: &RunConfig, state: AgentState, out_dir: &Path) -> Result<(Outcome, String)> {
    let doc = state.pdf_path.clone();
    let adapters = Arc::new(build_adapters(cfg, Mode::Sequential));
    if let Err(e) = adapters.check_if_scanned(&doc) {
        let lang = state.user_language.unwrap_or(cfg.language);
        let record = ErrorRecord::new(&doc_name(&doc), lang, ErrorStage::Ingest, e.to_string());
        eprintln!("{}", serde_json::to_string(&record)?);
        return Err(anyhow!(e).context(format!("cannot ingest {}", doc.display())));
    }

    let gateway = build_gateway(cfg)?;
    let registry = register_default_tools(gateway.clone(), adapters)?;
    let config = AgentConfig { max_steps: cfg.max_steps, ..AgentConfig::default() };
    // Scripted runs use a tick clock so repeated runs produce identical traces.
    let clock: Arc<dyn Clock> = match cfg.backend.kind {
        BackendKind::Scripted => Arc::new(TickClock::default()),
        BackendKind::Http => Arc::new(MonotonicClock::default()),
    };
    let agent = Agent::new(Arc::new(registry), gateway.clone(), config).with_clock(clock);
    let outcome: AgentOutcome = agent.run(state);

    let base = out_dir.join(stem(&doc));
    let result = RunResult {
        doc_name: doc_name(&doc),
        status: outcome.status,
        final_answer: outcome.final_answer.as_ref(),
        message: (!outcome.final_answer.as_ref().is_some_and(Value::is_object)).then(|| outcome.message()),
        end_reason: outcome.state.end_reason.as_deref(),
        last_error: outcome.state.last_error.as_ref(),
        tools: outcome.state.tool_history.iter().map(|r| r.tool_name.as_str()).collect(),
        step_count: outcome.state.step_count,
    };
    write_json(&sibling(&base, ".result.json"), &result)?;
    let mut trace = create(&sibling(&base, ".trace.jsonl"))?;
    write_trace_jsonl(&outcome.trace, &mut trace)?;
    trace.flush()?;
    std::fs::write(sibling(&base, ".ledger.json"), gateway.ledger().to_json())?;

    let status = if outcome.succeeded() { Outcome::Done } else { Outcome::Ended };
    Ok((status, outcome.message()))
}

fn default_instruction(lang: Option<Language>) -> &'static str {
    match lang {
        Some(Language::De) => "Extrahiere die Schlüssel-Wert-Paare aus diesem Dokument.",
        _ => "Extract the key-value pairs from this document.",
    }
}

pub fn extract(cfg: &RunConfig, args: ExtractArgs) -> Result<Outcome> {
    let user_language = args.user_language.or(cfg.user_language);
    let keys = if args.keys.is_empty() { cfg.schema_keys()? } else { Some(args.keys) };
    let input = args.prompt.unwrap_or_else(|| default_instruction(user_language).to_string());
    let mut state = AgentState::new(input, &args.doc).with_intent(UserIntent::KvpExtraction);
    if let Some(lang) = user_language {
        state = state.with_user_language(lang);
    }
    if let Some(keys) = keys {
        state = state.with_target_keys(keys);
    }
    let (outcome, message) = run_document(cfg, state, &args.out_dir)?;
    println!("{message}");
    Ok(outcome)
}

pub fn ask(cfg: &RunConfig, args: AskArgs) -> Result<Outcome> {
    let mut state =
        AgentState::new(args.question.clone(), &args.doc).with_intent(UserIntent::QuestionAnswering).with_question(args.question);
    if let Some(lang) = args.user_language.or(cfg.user_language) {
        state = state.with_user_language(lang);
    }
    let (outcome, message) = run_document(cfg, state, &args.out_dir)?;
    println!("{message}");
    Ok(outcome)
}

pub fn generate_qa(cfg: &RunConfig, args: GenerateQaArgs) -> Result<Outcome> {
    let anns = read_kvp_file(&args.kvp_file)?;
    validate_annotations(&anns)?;
    let items = par::with_workers(cfg.workers, |mode| generate_qa_dataset(&anns, mode));
    let sampled = sample_eval_set(&items, cfg.seed);
    write_json(&args.out, &items)?;
    if let Some(path) = &args.sampled {
        write_json(path, &sampled)?;
    }
    println!("{}", serde_json::to_string_pretty(&dataset_stats(&anns, &items, &sampled))?);
    Ok(Outcome::Done)
}

/// Expands directories into their regular files, sorted by name.
fn collect_docs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut docs = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            docs.extend(files);
        } else {
            docs.push(input.clone());
        }
    }
    Ok(docs)
}

pub fn baseline(cfg: &RunConfig, args: BaselineArgs) -> Result<Outcome> {
    let docs = collect_docs(&args.docs)?;
    let language = args.language.unwrap_or(cfg.language);
    let gateway = build_gateway(cfg)?;
    let modality = if args.vision { Modality::Vision } else { Modality::Text };
    let started = std::time::Instant::now();
    let errors = run_mode(cfg, |mode| -> Result<Vec<ErrorRecord>> {
        let mut adapters = build_adapters(cfg, mode);
        if let Some(dir) = &args.images {
            adapters = adapters.with_rendered_pages(dir);
        }
        match args.task {
            Task::Kvp => {
                let run = run_kvp_baseline(&gateway, &adapters, &docs, args.mode, language, modality, mode);
                write_json(&args.out, &run.predictions)?;
                Ok(run.errors)
            }
            Task::Qa => {
                let path = args.qa_file.as_ref().ok_or_else(|| anyhow!("the QA baseline needs --qa-file"))?;
                let items = read_qa_file(path)?;
                let run = run_qa_baseline(&gateway, &adapters, &docs, &items, modality, mode);
                write_json(&args.out, &run.predictions)?;
                Ok(run.errors)
            }
        }
    })?;
    gateway.ledger().set_runtime_ms(started.elapsed().as_millis() as u64);
    write_errors(&args.errors.unwrap_or_else(|| sibling(&args.out, ".errors.jsonl")), &errors)?;
    std::fs::write(args.ledger.unwrap_or_else(|| sibling(&args.out, ".ledger.json")), gateway.ledger().to_json())?;
    eprintln!("{} documents, {} errors", docs.len(), errors.len());
    Ok(Outcome::Done)
}

/// Splits `LABEL=PATH`; a bare path yields `None`.
fn split_labeled(spec: &str) -> (Option<&str>, PathBuf) {
    match spec.split_once('=') {
        Some((label, path)) if !label.is_empty() => (Some(label), PathBuf::from(path)),
        _ => (None, PathBuf::from(spec)),
    }
}

pub fn evaluate(cfg: &RunConfig, args: EvaluateArgs) -> Result<Outcome> {
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let out = |name: &str| args.out_dir.join(name);
    let summary = match args.task {
        Task::Kvp => {
            let anns = read_kvp_file(&args.gt)?;
            let mut preds = Vec::new();
            for spec in &args.preds {
                let (label, path) = split_labeled(spec);
                let lang = match label {
                    Some(l) => l.parse::<Language>()?,
                    None => cfg.language,
                };
                preds.push((lang, read_predictions(&path)?));
            }
            let eval = par::with_workers(cfg.workers, |mode| evaluate_kvp_predictions(&anns, &preds, args.nested, mode));
            write_scores_csv(&eval.fixed, create(&out("scores.csv"))?)?;
            if args.nested {
                write_nested_csv(&eval.nested, create(&out("nested_scores.csv"))?)?;
                write_scores_csv(&eval.open, create(&out("open_scores.csv"))?)?;
            }
            write_errors(&out("errors.jsonl"), &eval.errors)?;
            serde_json::to_value(eval.summary())?
        }
        Task::Qa => {
            let gt = read_qa_file(&args.gt)?;
            let mut preds = Vec::new();
            for spec in &args.preds {
                preds.extend(read_qa_predictions(&split_labeled(spec).1)?);
            }
            let run = evaluate_qa_predictions(&preds, &gt);
            write_csv(&run.evaluation.rows, create(&out("qa_rows.csv"))?)?;
            write_csv(&run.evaluation.averages, create(&out("scores.csv"))?)?;
            write_errors(&out("errors.jsonl"), &run.errors)?;
            serde_json::to_value(&run.summary)?
        }
    };
    write_json(&out("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(Outcome::Done)
}

pub fn report(args: ReportArgs) -> Result<Outcome> {
    let mut ledgers = Vec::new();
    for spec in &args.ledgers {
        let (label, path) = split_labeled(spec);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let ledger = UsageLedger::from_json(&text).with_context(|| format!("parsing ledger {}", path.display()))?;
        ledgers.push((label.map_or_else(|| stem(&path), str::to_string), ledger));
    }
    let mut scores = Vec::new();
    for spec in &args.scores {
        let (label, path) = split_labeled(spec);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let summary: ScoreSummary =
            serde_json::from_str(&text).with_context(|| format!("parsing score summary {}", path.display()))?;
        scores.push((label.map_or_else(|| stem(&path), str::to_string), summary));
    }
    let text = render_report(&ledgers, &scores);
    match &args.out {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(Outcome::Done)
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    doc_name: String,
    pdf_type: dop_core::ingest::PdfType,
    pages: usize,
    chars: usize,
    language: Option<Language>,
}

pub fn ingest(cfg: &RunConfig, args: IngestArgs) -> Result<Outcome> {
    let adapters = par::with_workers(cfg.workers, |mode| build_adapters(cfg, mode));
    let pdf_type = adapters.check_if_scanned(&args.doc)?;
    let mode = if args.ocr { ExtractMode::Ocr } else { ExtractMode::Direct };
    let text = adapters.extract_text(&args.doc, mode)?;
    if let Some(path) = &args.out {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = IngestSummary {
        doc_name: doc_name(&args.doc),
        pdf_type,
        pages: split_pages(&text).len(),
        chars: text.chars().count(),
        language: detect_language(&text).ok(),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(Outcome::Done)
}
