//! `dop`: run the extraction agent, build QA sets, run baselines, score predictions, report costs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{BackendKind, RunConfig};
use dop_core::schema::Language;

/// Exit code for input and configuration errors.
const EXIT_INPUT: u8 = 1;
/// Exit code for agent runs that ended without a verified result.
const EXIT_END: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "dop", version, about = "Key-value extraction and QA over Declaration of Performance documents")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// TOML run configuration; flags below override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    /// Replay file for the scripted backend.
    #[arg(long, global = true)]
    script: Option<PathBuf>,
    #[arg(long, global = true)]
    base_url: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    max_steps: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// OCR program template with `{input}`, `{output}` and `{page}` placeholders.
    #[arg(long, global = true)]
    ocr_command: Option<String>,
    /// Cache extracted text beside each document.
    #[arg(long, global = true)]
    cache: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the target key-value pairs from one document with the agent.
    Extract(ExtractArgs),
    /// Ask the agent a question about one document.
    Ask(AskArgs),
    /// Generate the QA dataset and its sampled evaluation subset from KVP annotations.
    GenerateQa(GenerateQaArgs),
    /// Run the single-pass prompting baseline over a set of documents.
    Baseline(BaselineArgs),
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Render usage ledgers and score summaries as a markdown report.
    Report(ReportArgs),
    /// Extract a document's text and report its type and language.
    Ingest(IngestArgs),
    /// Print the effective configuration as TOML.
    Config,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    doc: PathBuf,
    #[arg(long)]
    user_language: Option<Language>,
    /// Target keys; defaults to the configured schema file or all twelve keys.
    #[arg(long, num_args = 1..)]
    keys: Vec<String>,
    /// Request text given to the agent instead of the default instruction.
    #[arg(long)]
    prompt: Option<String>,
    /// Directory for the result, trace and ledger files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct AskArgs {
    doc: PathBuf,
    question: String,
    #[arg(long)]
    user_language: Option<Language>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct GenerateQaArgs {
    #[arg(long)]
    kvp_file: PathBuf,
    /// Output file for every generated question.
    #[arg(long)]
    out: PathBuf,
    /// Output file for the sampled evaluation subset.
    #[arg(long)]
    sampled: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    Kvp,
    Qa,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    /// Documents, or directories whose files are all used.
    #[arg(required = true)]
    docs: Vec<PathBuf>,
    /// Prompt variant: `T` (task only) or `T+S` (task plus schema template).
    #[arg(long, default_value = "T+S", value_parser = commands::parse_baseline_mode)]
    mode: dop_core::llm::prompts::BaselineMode,
    #[arg(long)]
    language: Option<Language>,
    #[arg(long, value_enum, default_value = "kvp")]
    task: Task,
    /// QA items to answer (QA task only).
    #[arg(long)]
    qa_file: Option<PathBuf>,
    /// Send pre-rendered page images instead of text.
    #[arg(long, requires = "images")]
    vision: bool,
    /// Directory holding `<stem>/page-<n>.png` renderings.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Error records as JSON lines; defaults to `<out>.errors.jsonl`.
    #[arg(long)]
    errors: Option<PathBuf>,
    /// Usage ledger; defaults to `<out>.ledger.json`.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, value_enum, default_value = "kvp")]
    task: Task,
    /// Ground truth: a KVP annotation file or a QA item file.
    #[arg(long)]
    gt: PathBuf,
    /// Prediction files; KVP files are given as `LANG=PATH`.
    #[arg(long = "pred", required = true)]
    preds: Vec<String>,
    /// Also score nested values path by path.
    #[arg(long)]
    nested: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Usage ledgers as `LABEL=PATH` or `PATH`.
    #[arg(long = "ledger")]
    ledgers: Vec<String>,
    /// Score summaries as `LABEL=PATH` or `PATH`.
    #[arg(long = "scores")]
    scores: Vec<String>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    doc: PathBuf,
    /// OCR every page instead of only pages failing the quality check.
    #[arg(long)]
    ocr: bool,
    /// Write the extracted text here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn effective_config(opts: &GlobalOpts) -> anyhow::Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(kind) = opts.backend {
        cfg.backend.kind = kind;
    }
    if let Some(script) = &opts.script {
        cfg.backend.script = Some(script.clone());
    }
    if let Some(url) = &opts.base_url {
        cfg.backend.base_url = url.clone();
    }
    if let Some(model) = &opts.model {
        cfg.backend.model = model.clone();
    }
    if let Some(n) = opts.max_steps {
        cfg.max_steps = n;
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = opts.workers {
        cfg.workers = workers;
    }
    if let Some(cmd) = &opts.ocr_command {
        cfg.ocr_command = Some(cmd.clone());
    }
    cfg.cache |= opts.cache;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = effective_config(&cli.global).and_then(|cfg| match cli.command {
        Command::Extract(args) => commands::extract(&cfg, args),
        Command::Ask(args) => commands::ask(&cfg, args),
        Command::GenerateQa(args) => commands::generate_qa(&cfg, args),
        Command::Baseline(args) => commands::baseline(&cfg, args),
        Command::Evaluate(args) => commands::evaluate(&cfg, args),
        Command::Report(args) => commands::report(args),
        Command::Ingest(args) => commands::ingest(&cfg, args),
        Command::Config => {
            print!("{}", cfg.to_toml()?);
            Ok(commands::Outcome::Done)
        }
    });
    match result {
        Ok(commands::Outcome::Done) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Ended) => ExitCode::from(EXIT_END),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
