use unicode_normalization::UnicodeNormalization;

use crate::schema::Language;

/// (pattern, replacement) pairs applied after lowercasing, per language.
const DE_RULES: &[(&str, &str)] = &[("nicht zutreffend", "nicht angegeben")];

/// Normalizes a value before comparison: NFKD, drop non-ASCII, lowercase, collapse
/// whitespace, then language-specific phrase mappings.
pub fn normalize_value(v: &str, language: Language) -> String {
    let ascii: String = v.nfkd().filter(char::is_ascii).collect();
    let lowered = ascii.to_ascii_lowercase();
    let mut out = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    if language == Language::De {
        for (from, to) in DE_RULES {
            if out.contains(from) {
                out = out.replace(from, to);
            }
        }
    }
    out
}
