use crate::schema::{find_target_key, fold_umlauts, target_key_names, KeyRole, Language, TARGET_KEYS};

/// Quoted segments of `text` ("...", '...', or typographic quotes).
fn quoted_segments(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, char)> = None;
    for (i, c) in text.char_indices() {
        match open {
            None if matches!(c, '"' | '\'' | '\u{201C}' | '\u{201E}' | '\u{2018}') => {
                // An apostrophe inside a word is not a quote.
                let prev = text[..i].chars().next_back();
                if c == '\'' && prev.is_some_and(char::is_alphanumeric) {
                    continue;
                }
                open = Some((i + c.len_utf8(), c));
            }
            Some((start, q)) => {
                let closes = match q {
                    '\u{201C}' | '\u{201E}' => matches!(c, '\u{201D}' | '\u{201C}'),
                    '\u{2018}' => c == '\u{2019}',
                    _ => c == q,
                };
                if closes {
                    spans.push((start, i));
                    open = None;
                }
            }
            None => {}
        }
    }
    spans
}

/// Names under which a key may be mentioned in free text, folded for matching.
fn aliases(en: &str, de: &str, role: KeyRole) -> Vec<String> {
    let mut out = Vec::new();
    for name in [en, de] {
        let folded = fold_umlauts(name);
        let bare = folded.replace("(s)", "").replace("(e)", "");
        out.push(folded);
        out.push(bare.trim().to_string());
    }
    if role == KeyRole::Avcp {
        out.push("avcp".into());
    }
    out.sort();
    out.dedup();
    out
}

/// Target key paths requested by the user, named in `lang`.
///
/// Explicit keys win. Otherwise quoted paths whose first component is a target key are
/// taken as paths, and plain mentions of key names select whole keys. With nothing
/// recognisable, all twelve keys are returned.
pub fn parse_target_keys(user_input: &str, explicit: &[String], lang: Language) -> Vec<String> {
    let explicit: Vec<String> = explicit.iter().map(|k| k.trim().to_string()).filter(|k| !k.is_empty()).collect();
    if !explicit.is_empty() {
        return explicit;
    }

    let mut paths: Vec<String> = Vec::new();
    let mut unquoted = String::with_capacity(user_input.len());
    let mut last = 0;
    for (start, end) in quoted_segments(user_input) {
        unquoted.push_str(&user_input[last..start]);
        unquoted.push(' ');
        last = end;
        let segment = user_input[start..end].trim();
        let mut parts = segment.split('/');
        let top = parts.next().unwrap_or("");
        if let Some(key) = find_target_key(top) {
            let rest: Vec<&str> = parts.map(str::trim).collect();
            let mut path = key.name(lang).to_string();
            for p in rest.iter().filter(|p| !p.is_empty()) {
                path.push('/');
                path.push_str(p);
            }
            if !paths.contains(&path) {
                paths.push(path);
            }
        }
    }
    unquoted.push_str(&user_input[last..]);

    let haystack = fold_umlauts(&unquoted);
    let mut keys: Vec<String> = Vec::new();
    for key in TARGET_KEYS.iter() {
        let name = key.name(lang);
        let covered = paths.iter().any(|p| p == name || p.starts_with(&format!("{name}/")));
        if !covered && aliases(key.en, key.de, key.role).iter().any(|a| contains_word(&haystack, a)) {
            keys.push(name.to_string());
        }
    }
    keys.extend(paths);
    if keys.is_empty() {
        target_key_names(lang)
    } else {
        keys
    }
}

fn contains_word(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.match_indices(needle).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + needle.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}
