//! Document adapters: modality detection, native text extraction with page-level OCR
//! recovery, OCR cleanup and language detection.

mod heuristics;
mod language;
mod ocr;
#[cfg(feature = "pdf")]
mod pdf;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::par::{self, Mode};

pub use heuristics::{is_garbage, needs_ocr, sanitize_ocr_text, MIN_ALPHABETIC, NON_PRINTABLE_RATIO, REPLACEMENT_RATIO};
pub use language::{detect_language, stopword_scores, MIN_DETECT_CHARS};
pub use ocr::{ExternalOcr, SidecarOcr};
#[cfg(feature = "pdf")]
pub use pdf::PdfExtractor;

/// Page separator in extracted text.
pub const PAGE_SEPARATOR: char = '\u{000C}';
/// Minimum share of extractable pages for a document to count as digital text.
pub const TEXT_PAGE_SHARE: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("OCR failed on page {}: {message}", page + 1)]
    Ocr { page: usize, message: String },
    #[error("OCR requested but no OCR command is configured")]
    OcrNotConfigured,
    #[error("text too short for language detection ({len} < {min} characters); extract more text first")]
    TextTooShort { len: usize, min: usize },
    #[error("unsupported document format: {path}")]
    Unsupported { path: String },
}

impl IngestError {
    pub(crate) fn unreadable(path: &Path, err: impl fmt::Display) -> Self {
        IngestError::Unreadable { path: path.display().to_string(), message: err.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdfType {
    Scanned,
    Text,
}

impl PdfType {
    pub fn as_str(self) -> &'static str {
        match self {
            PdfType::Scanned => "scanned",
            PdfType::Text => "text",
        }
    }
}

impl fmt::Display for PdfType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PdfType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scanned" => Ok(PdfType::Scanned),
            "text" => Ok(PdfType::Text),
            other => Err(format!("unknown pdf type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractMode {
    Direct,
    Ocr,
}

/// Page-wise access to a document's native text layer.
pub trait NativeExtractor: Send + Sync {
    fn pages(&self, doc: &Path) -> Result<Vec<String>, IngestError>;
}

/// Text recognition for a single page (0-based index).
pub trait OcrExtractor: Send + Sync {
    fn ocr_page(&self, doc: &Path, page: usize) -> Result<String, IngestError>;
}

pub fn split_pages(text: &str) -> Vec<String> {
    text.split(PAGE_SEPARATOR).map(str::to_string).collect()
}

pub fn join_pages(pages: &[String]) -> String {
    pages.join(&PAGE_SEPARATOR.to_string())
}

/// Plain-text documents whose pages are separated by form feeds. An empty page stands
/// for an image-only page.
#[derive(Debug, Default, Clone, Copy)]
pub struct TextFileExtractor;

impl NativeExtractor for TextFileExtractor {
    fn pages(&self, doc: &Path) -> Result<Vec<String>, IngestError> {
        let bytes = std::fs::read(doc).map_err(|e| IngestError::unreadable(doc, e))?;
        Ok(split_pages(&String::from_utf8_lossy(&bytes)))
    }
}

/// Chooses the extractor by file extension: PDF files use the PDF text layer, anything else
/// is read as a form-feed separated text file.
#[derive(Debug, Default, Clone, Copy)]
pub struct AutoExtractor;

fn is_pdf(doc: &Path) -> bool {
    doc.extension().is_some_and(|e| e.eq_ignore_ascii_case("pdf"))
}

impl NativeExtractor for AutoExtractor {
    fn pages(&self, doc: &Path) -> Result<Vec<String>, IngestError> {
        if is_pdf(doc) {
            #[cfg(feature = "pdf")]
            return PdfExtractor.pages(doc);
            #[cfg(not(feature = "pdf"))]
            return Err(IngestError::Unsupported { path: doc.display().to_string() });
        }
        TextFileExtractor.pages(doc)
    }
}

/// The extractors available to the agent and the batch commands.
#[derive(Clone)]
pub struct DocumentAdapters {
    pub native: Arc<dyn NativeExtractor>,
    pub ocr: Option<Arc<dyn OcrExtractor>>,
    /// Directory of pre-rendered page images (`<dir>/<stem>/page-<n>.png`) for vision runs.
    pub rendered_pages: Option<PathBuf>,
    /// Cache extracted text beside the document as `<stem>.txt`.
    pub cache: bool,
    /// How OCR recovery fans out over pages.
    pub mode: Mode,
}

impl fmt::Debug for DocumentAdapters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DocumentAdapters")
            .field("ocr", &self.ocr.is_some())
            .field("rendered_pages", &self.rendered_pages)
            .field("cache", &self.cache)
            .field("mode", &self.mode)
            .finish()
    }
}

impl Default for DocumentAdapters {
    fn default() -> Self {
        Self { native: Arc::new(AutoExtractor), ocr: None, rendered_pages: None, cache: false, mode: Mode::default() }
    }
}

impl DocumentAdapters {
    pub fn new(native: Arc<dyn NativeExtractor>) -> Self {
        Self { native, ..Self::default() }
    }

    pub fn with_ocr(mut self, ocr: Arc<dyn OcrExtractor>) -> Self {
        self.ocr = Some(ocr);
        self
    }

    pub fn with_cache(mut self, cache: bool) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_rendered_pages(mut self, dir: impl Into<PathBuf>) -> Self {
        self.rendered_pages = Some(dir.into());
        self
    }

    /// `Text` iff at least half of the pages have usable native text.
    pub fn check_if_scanned(&self, doc: &Path) -> Result<PdfType, IngestError> {
        let pages = self.native.pages(doc)?;
        Ok(classify_pages(&pages))
    }

    /// Extracts the document text, pages joined with form feeds. In direct mode only pages
    /// that fail the quality check go through OCR; in OCR mode every page does.
    pub fn extract_text(&self, doc: &Path, mode: ExtractMode) -> Result<String, IngestError> {
        let cache = self.cache_path(doc);
        if let Some(path) = &cache {
            if let Ok(text) = std::fs::read_to_string(path) {
                return Ok(text);
            }
        }
        let native = self.native.pages(doc)?;
        let pages = match mode {
            ExtractMode::Direct => self.recover_pages(doc, native)?,
            ExtractMode::Ocr => {
                let ocr = self.ocr.as_ref().ok_or(IngestError::OcrNotConfigured)?;
                let indices: Vec<usize> = (0..native.len().max(1)).collect();
                par::map(self.mode, &indices, |&i| ocr.ocr_page(doc, i)).into_iter().collect::<Result<Vec<_>, _>>()?
            }
        };
        let text = join_pages(&pages);
        if let Some(path) = cache {
            std::fs::write(&path, &text).map_err(|e| IngestError::unreadable(&path, e))?;
        }
        Ok(text)
    }

    fn recover_pages(&self, doc: &Path, pages: Vec<String>) -> Result<Vec<String>, IngestError> {
        if !pages.iter().any(|p| needs_ocr(p)) {
            return Ok(pages);
        }
        let Some(ocr) = self.ocr.as_ref() else {
            // Without OCR the unusable pages are kept as they are.
            return Ok(pages);
        };
        let indexed: Vec<(usize, String)> = pages.into_iter().enumerate().collect();
        par::map(self.mode, &indexed, |(i, text)| if needs_ocr(text) { ocr.ocr_page(doc, *i) } else { Ok(text.clone()) })
            .into_iter()
            .collect()
    }

    fn cache_path(&self, doc: &Path) -> Option<PathBuf> {
        let is_text = doc.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt"));
        (self.cache && !is_text).then(|| doc.with_extension("txt"))
    }

    /// Pre-rendered page images of a document, in page order.
    pub fn page_images(&self, doc: &Path) -> Result<Vec<PathBuf>, IngestError> {
        let Some(root) = &self.rendered_pages else {
            return Ok(Vec::new());
        };
        let stem = doc.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let dir = root.join(stem);
        let entries = std::fs::read_dir(&dir).map_err(|e| IngestError::unreadable(&dir, e))?;
        let mut pages: Vec<(usize, PathBuf)> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter_map(|p| {
                let name = p.file_name()?.to_str()?;
                let n = name.strip_prefix("page-")?.strip_suffix(".png")?.parse().ok()?;
                Some((n, p))
            })
            .collect();
        pages.sort();
        Ok(pages.into_iter().map(|(_, p)| p).collect())
    }
}

pub fn classify_pages(pages: &[String]) -> PdfType {
    if pages.is_empty() {
        return PdfType::Scanned;
    }
    let good = pages.iter().filter(|p| !needs_ocr(p)).count();
    if good as f64 / pages.len() as f64 >= TEXT_PAGE_SHARE {
        PdfType::Text
    } else {
        PdfType::Scanned
    }
}
