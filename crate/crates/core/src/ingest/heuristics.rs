//! Page-level quality checks for natively extracted text and OCR output cleanup.

/// Share of non-printable characters above which a page is unusable.
pub const NON_PRINTABLE_RATIO: f64 = 0.20;
/// Share of U+FFFD replacement characters above which a page is unusable.
pub const REPLACEMENT_RATIO: f64 = 0.05;
/// A nonempty page needs at least this many alphabetic characters.
pub const MIN_ALPHABETIC: usize = 10;

const ZERO_WIDTH: [char; 5] = ['\u{200B}', '\u{200C}', '\u{200D}', '\u{2060}', '\u{FEFF}'];

fn is_non_printable(c: char) -> bool {
    c.is_control() && !matches!(c, '\n' | '\r' | '\t' | '\u{000C}')
}

/// True when native extraction produced text too broken to use.
pub fn is_garbage(page_text: &str) -> bool {
    let total = page_text.chars().count();
    if total == 0 {
        return false;
    }
    let non_printable = page_text.chars().filter(|c| is_non_printable(*c)).count();
    let replacement = page_text.chars().filter(|c| *c == '\u{FFFD}').count();
    let alphabetic = page_text.chars().filter(|c| c.is_alphabetic()).count();
    non_printable as f64 / total as f64 > NON_PRINTABLE_RATIO
        || replacement as f64 / total as f64 > REPLACEMENT_RATIO
        || (!page_text.trim().is_empty() && alphabetic < MIN_ALPHABETIC)
}

/// A page needs OCR when it is blank (image-only) or garbage.
pub fn needs_ocr(page_text: &str) -> bool {
    page_text.trim().is_empty() || is_garbage(page_text)
}

/// Removes control characters (keeping newline, tab and the form-feed page separator) and
/// zero-width characters, then shortens runs of three or more identical ASCII punctuation
/// characters to exactly three. Idempotent.
pub fn sanitize_ocr_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut run_char = None;
    let mut run_len = 0usize;
    for c in text.chars() {
        if (c.is_control() && !matches!(c, '\n' | '\t' | '\u{000C}')) || ZERO_WIDTH.contains(&c) {
            continue;
        }
        if Some(c) == run_char {
            run_len += 1;
        } else {
            run_char = Some(c);
            run_len = 1;
        }
        if c.is_ascii_punctuation() && run_len > 3 {
            continue;
        }
        out.push(c);
    }
    out
}
