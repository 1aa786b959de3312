use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dop_core::llm::Pricing;
use dop_core::schema::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Scripted,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Replay file for the scripted backend: `{"call_site": [response, ...]}`.
    pub script: Option<PathBuf>,
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Scripted,
            script: None,
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120,
        }
    }
}

/// Everything a run depends on besides its inputs. Loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub backend: BackendConfig,
    pub pricing: Pricing,
    pub max_steps: usize,
    pub seed: u64,
    /// Language assumed for the user when a command gets none.
    pub user_language: Option<Language>,
    /// Language of baseline prompts and evaluation when a command gets none.
    pub language: Language,
    /// JSON array of target key names used when `extract` gets no `--keys`.
    pub schema_file: Option<PathBuf>,
    /// OCR program template, e.g. `tesseract {input} stdout`.
    pub ocr_command: Option<String>,
    /// Use `<doc>.ocr.txt` sidecar files as OCR output when no command is configured.
    pub sidecar_ocr: bool,
    /// Cache extracted text beside each document.
    pub cache: bool,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: BackendConfig::default(),
            pricing: Pricing::default(),
            max_steps: dop_core::agent::DEFAULT_MAX_STEPS,
            seed: 42,
            user_language: None,
            language: Language::En,
            schema_file: None,
            ocr_command: None,
            sidecar_ocr: false,
            cache: false,
            workers: 4,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            bail!("max_steps must be at least 1");
        }
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if self.pricing.input_per_1m < 0.0 || self.pricing.output_per_1m < 0.0 {
            bail!("pricing must not be negative");
        }
        Ok(())
    }

    /// Target keys from `schema_file`, if configured.
    pub fn schema_keys(&self) -> Result<Option<Vec<String>>> {
        let Some(path) = &self.schema_file else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading schema file {}", path.display()))?;
        let keys: Vec<String> =
            serde_json::from_str(&text).with_context(|| format!("{}: expected a JSON array of key names", path.display()))?;
        Ok(Some(keys))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.backend.kind = BackendKind::Http;
        cfg.user_language = Some(Language::De);
        cfg.ocr_command = Some("tesseract {input} stdout -l deu".into());
        let text = cfg.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = toml::from_str("max_steps = 10\n[backend]\nkind = \"http\"\n").unwrap();
        assert_eq!(cfg.max_steps, 10);
        assert_eq!(cfg.backend.kind, BackendKind::Http);
        assert_eq!(cfg.backend.model, "gpt-4o");
        assert_eq!(cfg.workers, 4);
    }

    #[test]
    fn zero_workers_rejected() {
        let cfg = RunConfig { workers: 0, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
