use std::path::Path;

use super::{IngestError, NativeExtractor};

/// Native text layer of PDF files. Pages whose content cannot be decoded come back empty
/// so that they are routed to OCR instead of failing the document.
#[derive(Debug, Default, Clone, Copy)]
pub struct PdfExtractor;

impl NativeExtractor for PdfExtractor {
    fn pages(&self, doc: &Path) -> Result<Vec<String>, IngestError> {
        let pdf = lopdf::Document::load(doc).map_err(|e| IngestError::unreadable(doc, e))?;
        Ok(pdf
            .get_pages()
            .keys()
            .map(|&n| pdf.extract_text(&[n]).unwrap_or_default())
            .collect())
    }
}
