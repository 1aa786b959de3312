//! Repair of model outputs that are meant to be JSON, plus canonical serialization.

use serde_json::{Map, Value};

/// Removes a leading Markdown code fence (with optional language hint such as `json`) and a
/// trailing fence. Text outside the fences is dropped.
pub fn strip_code_fences(raw: &str) -> &str {
    let text = raw.trim();
    let Some(start) = text.find("```") else {
        return text;
    };
    let after = &text[start + 3..];
    // The language hint runs up to the end of the opening line.
    let body_start = match after.find('\n') {
        Some(nl) => {
            let hint = after[..nl].trim();
            if hint.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                nl + 1
            } else {
                0
            }
        }
        None => {
            // Single-line fence: ```json {...}```
            let hint_len = after
                .chars()
                .take_while(|c| c.is_ascii_alphabetic())
                .map(char::len_utf8)
                .sum::<usize>();
            hint_len
        }
    };
    let body = &after[body_start..];
    match body.rfind("```") {
        Some(end) => body[..end].trim(),
        None => body.trim(),
    }
}

/// Returns the first balanced `{ ... }` span, skipping braces inside string literals.
pub fn outermost_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, c) in text[start..].char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + offset + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Doubles backslashes inside string literals that do not start a valid JSON escape.
pub fn repair_escapes(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 8);
    let mut in_string = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if !in_string {
            if c == '"' {
                in_string = true;
            }
            out.push(c);
            i += 1;
            continue;
        }
        match c {
            '"' => {
                in_string = false;
                out.push(c);
                i += 1;
            }
            '\\' => {
                let next = chars.get(i + 1).copied();
                let valid = match next {
                    Some('"' | '\\' | '/' | 'b' | 'f' | 'n' | 'r' | 't') => true,
                    Some('u') => chars.get(i + 2..i + 6).is_some_and(|h| h.iter().all(char::is_ascii_hexdigit)),
                    _ => false,
                };
                if valid {
                    out.push('\\');
                    out.push(next.unwrap());
                    i += 2;
                } else {
                    out.push_str("\\\\");
                    i += 1;
                }
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

/// Cleans a raw model output and parses it strictly as a JSON object.
///
/// Steps: strip code fences and language hints, trim to the outermost balanced object,
/// repair lone backslashes, strict parse. `None` means the output is invalid (validity 0).
pub fn clean_json(raw: &str) -> Option<Map<String, Value>> {
    let unfenced = strip_code_fences(raw);
    let span = outermost_object(unfenced)?;
    let parsed = serde_json::from_str::<Value>(span)
        .ok()
        .or_else(|| serde_json::from_str::<Value>(&repair_escapes(span)).ok())?;
    match parsed {
        Value::Object(map) => Some(map),
        _ => None,
    }
}

/// Like [`clean_json`] but accepts any JSON value (arrays, strings) after fence stripping.
pub fn clean_json_value(raw: &str) -> Option<Value> {
    if let Some(map) = clean_json(raw) {
        return Some(Value::Object(map));
    }
    let unfenced = strip_code_fences(raw);
    serde_json::from_str::<Value>(unfenced)
        .ok()
        .or_else(|| serde_json::from_str::<Value>(&repair_escapes(unfenced)).ok())
}

/// Serializes with lexicographically sorted object keys and `", "` / `": "` separators.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, false, &mut out);
    out
}

/// Canonical form used for tool inputs: sorted keys and whitespace runs inside strings
/// collapsed to single spaces, so equality detects repeated calls.
pub fn canonical_input(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, true, &mut out);
    out
}

fn write_canonical(value: &Value, collapse: bool, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_string(k, collapse, out);
                out.push_str(": ");
                write_canonical(&map[k.as_str()], collapse, out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_canonical(v, collapse, out);
            }
            out.push(']');
        }
        Value::String(s) => write_string(s, collapse, out),
        other => out.push_str(&other.to_string()),
    }
}

fn write_string(s: &str, collapse: bool, out: &mut String) {
    let owned;
    let s = if collapse {
        owned = s.split_whitespace().collect::<Vec<_>>().join(" ");
        owned.as_str()
    } else {
        s
    };
    out.push_str(&Value::String(s.to_string()).to_string());
}
