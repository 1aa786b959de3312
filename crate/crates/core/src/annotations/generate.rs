use serde_json::Value;

use super::{value_text, KvpAnnotation, QaItem};
use crate::metrics::flatten::{flatten_json, scalar_text};
use crate::par::{self, Mode};
use crate::schema::{find_target_key, KeyRole, Language, SIGNATURE_REQUIRED_PATHS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QaGenError {
    #[error("value of {key:?} is nested; use generate_nested_qa")]
    NestedValue { key: String },
}

fn role_of(key: &str) -> KeyRole {
    find_target_key(key).map(|k| k.role).unwrap_or(KeyRole::Factual)
}

fn base_question(key: &str, lang: Language) -> String {
    match (role_of(key), lang) {
        (KeyRole::Entity, Language::En) => format!("Who is the {key}?"),
        (KeyRole::Entity, Language::De) => format!("Wer ist der/die {key}?"),
        (KeyRole::Avcp, Language::En) => "Which AVCP system applies according to the Declaration of Performance?".to_string(),
        (KeyRole::Avcp, Language::De) => "Welches AVCP-System gilt gemäß der Leistungserklärung?".to_string(),
        (_, Language::En) => format!("What is the {key}?"),
        // The article is emitted literally rather than resolved per noun gender.
        (_, Language::De) => format!("Was ist der/die/das {key}?"),
    }
}

/// Question for a scalar-valued key.
pub fn generate_flat_qa(ann: &KvpAnnotation, language: Language) -> Result<QaItem, QaGenError> {
    let value = ann.value(language);
    if value.is_object() {
        return Err(QaGenError::NestedValue { key: ann.key(language).to_string() });
    }
    Ok(generate_base_qa(ann, language))
}

/// Base-level question for any key. Nested values become one parent-level question whose
/// answer is the canonical JSON of the whole object.
pub fn generate_base_qa(ann: &KvpAnnotation, language: Language) -> QaItem {
    let key = ann.key(language).to_string();
    QaItem {
        doc_name: ann.doc_name.clone(),
        user_language: language,
        parent_key: key.clone(),
        question: base_question(&key, language),
        value: value_text(ann.value(language)),
        key,
        normalized_key: None,
    }
}

/// Strips array indices from the last path component: `Signatories[0]/Name` -> `Name`.
fn leaf_name(path: &str) -> &str {
    let last = path.rsplit('/').next().unwrap_or(path);
    last.split('[').next().unwrap_or(last)
}

fn nested_question(parent: &str, path: &str, lang: Language) -> (String, Option<&'static str>) {
    let def = find_target_key(parent);
    let value_of = || match lang {
        Language::En => format!("What is the value of '{path}'?"),
        Language::De => format!("Was ist der Wert von '{path}'?"),
    };
    match def {
        Some(k) if k.is_signature() => {
            let leaf = leaf_name(path);
            let place = SIGNATURE_REQUIRED_PATHS[2];
            let q = if leaf == "Name" {
                match lang {
                    Language::En => format!("Who signed the declaration ({path})?"),
                    Language::De => format!("Wer hat die Erklärung unterschrieben ({path})?"),
                }
            } else if path.contains(place.0) || path.contains(place.1) {
                match lang {
                    Language::En => format!("Where was the declaration signed ({path})?"),
                    Language::De => format!("Wo wurde die Erklärung unterschrieben ({path})?"),
                }
            } else {
                value_of()
            };
            (q, Some("signature"))
        }
        Some(k) if k.is_declared_performance() => (value_of(), Some("performance")),
        _ => (value_of(), None),
    }
}

/// Sub-paths a parent key must carry; missing ones get empty-answer placeholders.
fn required_paths(parent: &str, lang: Language) -> Vec<String> {
    match find_target_key(parent) {
        Some(k) if k.is_signature() => SIGNATURE_REQUIRED_PATHS
            .iter()
            .map(|(en, de)| {
                let suffix = match lang {
                    Language::En => en,
                    Language::De => de,
                };
                format!("{parent}/{suffix}")
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// One question per flattened leaf of a nested value, plus placeholders for required
/// sub-keys the annotation lacks. Scalar values yield no items.
pub fn generate_nested_qa(ann: &KvpAnnotation, language: Language) -> Vec<QaItem> {
    let value = ann.value(language);
    if !value.is_object() {
        return Vec::new();
    }
    let parent = ann.key(language);
    let mut pairs: Vec<(String, String)> =
        flatten_json(value, parent).into_iter().map(|(p, v)| (p, scalar_text(&v))).collect();
    for required in required_paths(parent, language) {
        if !pairs.iter().any(|(p, _)| *p == required) {
            pairs.push((required, String::new()));
        }
    }
    pairs
        .into_iter()
        .map(|(path, value)| {
            let (question, tag) = nested_question(parent, &path, language);
            QaItem {
                doc_name: ann.doc_name.clone(),
                user_language: language,
                parent_key: parent.to_string(),
                key: path,
                value,
                question,
                normalized_key: tag.map(str::to_string),
            }
        })
        .collect()
}

/// Full QA set: for every annotation and both languages, the base question followed by
/// any nested questions. Order follows the annotation order.
pub fn generate_qa_dataset(anns: &[KvpAnnotation], mode: Mode) -> Vec<QaItem> {
    par::map(mode, anns, |ann| {
        let mut items = Vec::new();
        for lang in Language::ALL {
            items.push(generate_base_qa(ann, lang));
            if matches!(ann.value(lang), Value::Object(_)) {
                items.extend(generate_nested_qa(ann, lang));
            }
        }
        items
    })
    .into_iter()
    .flatten()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn ann(key_en: &str, key_de: &str, en: Value, de: Value) -> KvpAnnotation {
        KvpAnnotation {
            doc_name: "011-Leistungserklaerung-KS-10DF.pdf".into(),
            doc_lang: "de".into(),
            key_en: key_en.into(),
            key_de: key_de.into(),
            value_en: en,
            value_de: de,
        }
    }

    #[test]
    fn factual_and_entity_questions() {
        let a = ann("Declaration Number", "Erklärungsnummer", json!("DoP-Nr. 110240002"), json!("DoP-Nr. 110240002"));
        assert_eq!(generate_flat_qa(&a, Language::En).unwrap().question, "What is the Declaration Number?");
        assert_eq!(generate_flat_qa(&a, Language::De).unwrap().question, "Was ist der/die/das Erklärungsnummer?");

        let nb = ann("Notified Body", "Notifizierte Stelle", json!("CERT Baustoffe GmbH - 2510"), json!("CERT Baustoffe GmbH - 2510"));
        assert_eq!(generate_flat_qa(&nb, Language::De).unwrap().question, "Wer ist der/die Notifizierte Stelle?");
        assert_eq!(generate_flat_qa(&nb, Language::En).unwrap().question, "Who is the Notified Body?");
    }

    #[test]
    fn manufacturer_value_copied() {
        let m = ann("Manufacturer", "Hersteller", json!("Company x, Switzerland"), json!("Company x, Schweiz"));
        let item = generate_flat_qa(&m, Language::En).unwrap();
        assert_eq!(item.value, "Company x, Switzerland");
        assert_eq!(item.question, "Who is the Manufacturer?");
        assert_eq!(item.parent_key, "Manufacturer");
        assert!(item.normalized_key.is_none());
    }

    #[test]
    fn avcp_template() {
        let a = ann(
            "System(s) of Assessment and Verification of Constancy of Performance (AVCP)",
            "System(e) zur Bewertung und Überprüfung der Leistungsbeständigkeit (AVCP)",
            json!("System 2+"),
            json!("System 2+"),
        );
        assert_eq!(
            generate_flat_qa(&a, Language::En).unwrap().question,
            "Which AVCP system applies according to the Declaration of Performance?"
        );
    }

    #[test]
    fn nested_value_rejected_by_flat_generator() {
        let a = ann("Signature", "Unterschrift", json!({"Notice": ""}), json!({"Hinweis": ""}));
        assert!(generate_flat_qa(&a, Language::En).is_err());
    }

    #[test]
    fn signature_questions_and_placeholders() {
        let a = ann(
            "Signature",
            "Unterschrift",
            json!({"Signatories": [{"Name": "G. Wolff", "Position": "GF"}], "Place and Date of Issue": "Löbnitz, 1.1.2020"}),
            json!({"Unterzeichner": [{"Name": "G. Wolff", "Position": "GF"}], "Ort und Datum der Ausstellung": "Löbnitz, 1.1.2020"}),
        );
        let en = generate_nested_qa(&a, Language::En);
        assert_eq!(en.len(), 4);
        assert_eq!(en[0].key, "Signature/Signatories[0]/Name");
        assert_eq!(en[0].question, "Who signed the declaration (Signature/Signatories[0]/Name)?");
        assert_eq!(en[2].question, "Where was the declaration signed (Signature/Place and Date of Issue)?");
        // Notice is missing: placeholder with empty answer.
        assert_eq!(en[3].key, "Signature/Notice");
        assert_eq!(en[3].value, "");
        assert!(en.iter().all(|i| i.normalized_key.as_deref() == Some("signature")));

        let de = generate_nested_qa(&a, Language::De);
        assert_eq!(de[0].question, "Wer hat die Erklärung unterschrieben (Unterschrift/Unterzeichner[0]/Name)?");
        assert_eq!(de[3].key, "Unterschrift/Hinweis");
    }

    #[test]
    fn declared_performance_leaf() {
        let a = ann(
            "Declared Performance",
            "Erklärte Leistung",
            json!({"Gross Dry Bulk Density Class": "1.4"}),
            json!({"Klasse der Brutto-Trockenrohdichte": "1,4"}),
        );
        let de = generate_nested_qa(&a, Language::De);
        assert_eq!(de.len(), 1);
        assert_eq!(de[0].key, "Erklärte Leistung/Klasse der Brutto-Trockenrohdichte");
        assert_eq!(de[0].value, "1,4");
        assert_eq!(de[0].question, "Was ist der Wert von 'Erklärte Leistung/Klasse der Brutto-Trockenrohdichte'?");
        assert_eq!(de[0].normalized_key.as_deref(), Some("performance"));
        let en = generate_nested_qa(&a, Language::En);
        assert_eq!(en[0].question, "What is the value of 'Declared Performance/Gross Dry Bulk Density Class'?");
    }
}
