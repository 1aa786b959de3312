//! Depth-first flattening of nested JSON into `path -> scalar` pairs.
//!
//! Object keys are joined with `/`; array elements are addressed as `Key[i]`. Output order
//! follows document order of the input.

use serde_json::{Map, Value};

pub const PATH_SEPARATOR: char = '/';

/// Ordered list of flattened `(path, scalar)` pairs.
pub type FlatMap = Vec<(String, Value)>;

pub fn flatten_json(value: &Value, prefix: &str) -> FlatMap {
    let mut out = Vec::new();
    flatten_into(value, prefix, &mut out);
    out
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}{PATH_SEPARATOR}{key}")
    }
}

fn flatten_into(value: &Value, path: &str, out: &mut FlatMap) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten_into(v, &join(path, k), out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_into(v, &format!("{path}[{i}]"), out);
            }
        }
        scalar => out.push((path.to_string(), scalar.clone())),
    }
}

/// Renders a flattened scalar as comparison text (`null` becomes empty).
pub fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Key(String),
    Index(usize),
}

/// Splits one path component such as `Signatories[0][1]` into key and index segments.
fn parse_component(component: &str, out: &mut Vec<Segment>) {
    let mut rest = component;
    let mut indices = Vec::new();
    while rest.ends_with(']') {
        let Some(open) = rest.rfind('[') else { break };
        match rest[open + 1..rest.len() - 1].parse::<usize>() {
            Ok(i) => {
                indices.push(i);
                rest = &rest[..open];
            }
            Err(_) => break,
        }
    }
    if !rest.is_empty() {
        out.push(Segment::Key(rest.to_string()));
    }
    out.extend(indices.into_iter().rev().map(Segment::Index));
}

fn parse_path(path: &str) -> Vec<Segment> {
    let mut segments = Vec::new();
    if path.is_empty() {
        return segments;
    }
    for component in path.split(PATH_SEPARATOR) {
        parse_component(component, &mut segments);
    }
    segments
}

/// Rebuilds a nested value from flattened pairs produced with an empty prefix.
///
/// Exact inverse of [`flatten_json`] for values whose keys contain neither `/` nor a
/// trailing `[n]` and which hold no empty containers.
pub fn unflatten(pairs: &[(String, Value)]) -> Value {
    let mut root = Value::Null;
    for (path, scalar) in pairs {
        insert(&mut root, &parse_path(path), scalar.clone());
    }
    root
}

fn insert(slot: &mut Value, segments: &[Segment], scalar: Value) {
    let Some((head, tail)) = segments.split_first() else {
        *slot = scalar;
        return;
    };
    match head {
        Segment::Key(k) => {
            if !slot.is_object() {
                *slot = Value::Object(Map::new());
            }
            let map = slot.as_object_mut().unwrap();
            let child = map.entry(k.clone()).or_insert(Value::Null);
            insert(child, tail, scalar);
        }
        Segment::Index(i) => {
            if !slot.is_array() {
                *slot = Value::Array(Vec::new());
            }
            let items = slot.as_array_mut().unwrap();
            if items.len() <= *i {
                items.resize(*i + 1, Value::Null);
            }
            insert(&mut items[*i], tail, scalar);
        }
    }
}
