use std::path::{Path, PathBuf};
use std::process::Command;

use super::{split_pages, IngestError, OcrExtractor};

/// Runs an external OCR program once per page.
///
/// The template is split on whitespace; `{input}` is replaced by the page image,
/// `{output}` by a temporary output file and `{page}` by the 1-based page number. The
/// page image is looked up as `<stem>/page-<n>.png` beside the document, falling back to
/// the document itself. Text is read from the output file if the program wrote one,
/// otherwise from its standard output.
#[derive(Debug, Clone)]
pub struct ExternalOcr {
    pub template: String,
}

impl ExternalOcr {
    pub fn new(template: impl Into<String>) -> Self {
        Self { template: template.into() }
    }

    pub fn page_image(doc: &Path, page: usize) -> PathBuf {
        let stem = doc.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let image = doc.with_file_name(&stem).join(format!("page-{}.png", page + 1));
        if image.exists() {
            image
        } else {
            doc.to_path_buf()
        }
    }
}

impl OcrExtractor for ExternalOcr {
    fn ocr_page(&self, doc: &Path, page: usize) -> Result<String, IngestError> {
        let input = Self::page_image(doc, page);
        let out_dir = std::env::temp_dir();
        let output = out_dir.join(format!("dop-ocr-{}-{}-{}.txt", std::process::id(), page, unique_suffix(doc)));
        let mut parts = self.template.split_whitespace().map(|part| {
            part.replace("{input}", &input.to_string_lossy())
                .replace("{output}", &output.to_string_lossy())
                .replace("{page}", &(page + 1).to_string())
        });
        let program = parts.next().ok_or_else(|| IngestError::Ocr { page, message: "empty OCR command".into() })?;
        let result = Command::new(&program)
            .args(parts)
            .output()
            .map_err(|e| IngestError::Ocr { page, message: format!("{program}: {e}") })?;
        if !result.status.success() {
            let _ = std::fs::remove_file(&output);
            return Err(IngestError::Ocr {
                page,
                message: format!("{program} exited with {}: {}", result.status, String::from_utf8_lossy(&result.stderr).trim()),
            });
        }
        let text = match std::fs::read(&output) {
            Ok(bytes) => {
                let _ = std::fs::remove_file(&output);
                String::from_utf8_lossy(&bytes).into_owned()
            }
            Err(_) => String::from_utf8_lossy(&result.stdout).into_owned(),
        };
        Ok(text)
    }
}

fn unique_suffix(doc: &Path) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    doc.hash(&mut h);
    h.finish()
}

/// OCR stand-in that reads pre-computed page texts from `<doc>.ocr.txt` (pages separated by
/// form feeds). Used for fixtures and for corpora that were OCRed offline.
#[derive(Debug, Default, Clone, Copy)]
pub struct SidecarOcr;

impl SidecarOcr {
    pub fn sidecar_path(doc: &Path) -> PathBuf {
        let mut name = doc.file_name().unwrap_or_default().to_os_string();
        name.push(".ocr.txt");
        doc.with_file_name(name)
    }
}

impl OcrExtractor for SidecarOcr {
    fn ocr_page(&self, doc: &Path, page: usize) -> Result<String, IngestError> {
        let path = Self::sidecar_path(doc);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| IngestError::Ocr { page, message: format!("{}: {e}", path.display()) })?;
        split_pages(&text)
            .into_iter()
            .nth(page)
            .ok_or_else(|| IngestError::Ocr { page, message: format!("{} has no page {}", path.display(), page + 1) })
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    #[test]
    fn external_command_stdout() {
        let dir = tempfile::tempdir().unwrap();
        let doc = dir.path().join("d.pdf");
        std::fs::write(&doc, b"x").unwrap();
        let ocr = ExternalOcr::new("echo page {page}");
        assert_eq!(ocr.ocr_page(&doc, 1).unwrap().trim(), "page 2");
    }

    #[test]
    fn external_command_failure_names_page() {
        let ocr = ExternalOcr::new("false {input}");
        let err = ocr.ocr_page(Path::new("/nonexistent.pdf"), 3).unwrap_err();
        assert!(matches!(err, IngestError::Ocr { page: 3, .. }));
        assert!(err.to_string().contains("page 4"));
    }
}
