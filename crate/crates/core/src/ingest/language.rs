//! Stopword-frequency language identification for the two corpus languages.

use crate::schema::Language;

use super::IngestError;

/// Minimum input length (in characters) for a usable estimate.
pub const MIN_DETECT_CHARS: usize = 20;

const EN_STOPWORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "is", "for", "with", "on", "by", "as", "this", "that", "be", "are", "from", "or",
    "an", "at", "it", "not", "which", "product", "performance", "declared", "declaration", "accordance", "issued",
    "signed", "behalf", "manufacturer", "intended", "use", "system",
];

const DE_STOPWORDS: &[&str] = &[
    "der", "die", "das", "und", "ist", "von", "zu", "mit", "den", "des", "für", "auf", "im", "in", "dem", "nicht",
    "ein", "eine", "als", "auch", "nach", "bei", "oder", "wird", "sich", "zur", "zum", "leistung", "erklärung",
    "erklärten", "hersteller", "gemäß", "produkt", "produktes", "entspricht", "verwendungszweck", "unterzeichnet",
];

/// Counts stopword hits for English and German.
pub fn stopword_scores(text: &str) -> (usize, usize) {
    let mut en = 0;
    let mut de = 0;
    for word in text.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let w = word.to_lowercase();
        if EN_STOPWORDS.contains(&w.as_str()) {
            en += 1;
        }
        if DE_STOPWORDS.contains(&w.as_str()) {
            de += 1;
        }
    }
    (en, de)
}

/// Picks the language with more stopword hits; ties go to German, the majority language
/// of the corpus.
pub fn detect_language(text: &str) -> Result<Language, IngestError> {
    let len = text.trim().chars().count();
    if len < MIN_DETECT_CHARS {
        return Err(IngestError::TextTooShort { len, min: MIN_DETECT_CHARS });
    }
    let (en, de) = stopword_scores(text);
    Ok(if en > de { Language::En } else { Language::De })
}
