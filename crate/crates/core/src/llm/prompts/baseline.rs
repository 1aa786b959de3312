//! Single-pass baseline prompts: KVP without schema (T), KVP with schema (T+S), and QA.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::schema::{schema_text, Language};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineMode {
    /// Task description only.
    #[serde(rename = "T")]
    Task,
    /// Task description plus the schema template.
    #[serde(rename = "T+S")]
    TaskSchema,
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineMode::Task => "T",
            BaselineMode::TaskSchema => "T+S",
        })
    }
}

impl FromStr for BaselineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T" => Ok(BaselineMode::Task),
            "T+S" | "TS" => Ok(BaselineMode::TaskSchema),
            other => Err(format!("unknown baseline mode {other:?} (expected T or T+S)")),
        }
    }
}

const LANGUAGE_RULES_EN: &str = "Language Requirement - VERY IMPORTANT:\n\
- The key names and all extracted values must match the language of this prompt.\n\
- Do not translate or localize terms - return key names and values exactly in the same language used in the prompt.\n\
- For example:\n  \
* If the prompt is in German, all keys and values must also be in German.\n  \
* If the prompt is in English, the output must be entirely in English.\n\
- Your output will be considered incorrect and rejected if this rule is violated.\n";

const LANGUAGE_RULES_DE: &str = "Sprachanforderung - SEHR WICHTIG:\n\
- Die Schlüsselnamen und alle extrahierten Werte müssen der Sprache dieser Eingabe entsprechen.\n\
- Begriffe nicht übersetzen oder lokalisieren - Schlüsselnamen und -werte müssen exakt in der gleichen Sprache zurückgegeben werden, die in der Eingabe verwendet wurde.\n\
- Beispiel:\n  \
* Wenn die Eingabeaufforderung auf Deutsch ist, müssen alle Schlüssel und Werte ebenfalls auf Deutsch sein.\n  \
* Wenn die Eingabeaufforderung auf Englisch ist, muss die Ausgabe vollständig auf Englisch sein.\n\
- Ihre Ausgabe wird als fehlerhaft gewertet und abgelehnt, wenn diese Regel verletzt wird.\n";

/// KVP baseline prompt for one document.
pub fn baseline_kvp_prompt(mode: BaselineMode, lang: Language, document_text: &str) -> String {
    match (mode, lang) {
        (BaselineMode::Task, Language::En) => format!(
            "You are an advanced multilingual information extraction assistant. Your task is to extract all key-value pairs from the document text below \
             and return them in a valid JSON object. The extraction must preserve the structure of the document and follow the requirements below.\n\n\
             {LANGUAGE_RULES_EN}\n\
             Handling Missing Values:\n\
             - If a key is relevant but no value can be found, include it with an empty string: \"\"\n\
             - You may use semantic reasoning to infer values if they are paraphrased or not explicitly stated.\n\n\
             Output Format:\n\
             - Return a single valid JSON object.\n\
             - Do not return explanations, markdown, or extra text - just the JSON.\n\n\
             Document Content:\n{document_text}\n"
        ),
        (BaselineMode::Task, Language::De) => format!(
            "Sie sind ein erfahrener Assistent für die mehrsprachige Informationsextraktion. Ihre Aufgabe ist es, alle Schlüssel-Wert-Paare aus dem unten stehenden Dokumenttext \
             zu extrahieren und in einem gültigen JSON-Objekt zurückzugeben. Die Extraktion muss die Struktur des Dokuments bewahren und die unten stehenden Anforderungen erfüllen.\n\n\
             {LANGUAGE_RULES_DE}\n\
             Umgang mit fehlenden Werten:\n\
             - Wenn ein Schlüssel relevant ist, aber kein Wert gefunden werden kann, fügen Sie ihn mit einer leeren Zeichenfolge ein: \"\"\n\
             - Sie dürfen Werte semantisch ableiten, wenn sie umschrieben oder nicht ausdrücklich genannt sind.\n\n\
             Ausgabeformat:\n\
             - Geben Sie ein einzelnes gültiges JSON-Objekt zurück.\n\
             - Geben Sie keine Erklärungen, Markdowns oder zusätzlichen Text zurück - nur das JSON.\n\n\
             Dokumentinhalt:\n{document_text}\n"
        ),
        (BaselineMode::TaskSchema, Language::En) => format!(
            "You are an experienced assistant for multilingual information extraction. Your task is to extract key-value pairs from the document text below \
             and return them in a valid JSON object. The extraction must preserve the structure of the document and follow the requirements below.\n\n\
             Target Keys (required fields):\n{schema}\n\n\
             {LANGUAGE_RULES_EN}\n\
             Handling Missing Values:\n\
             - If a key is relevant but no value can be found, include it with an empty string: \"\"\n\n\
             Output Format:\n\
             - Return a single valid JSON object.\n\
             - Do not return explanations, markdown, or extra text - just the JSON.\n\n\
             Document Content:\n{document_text}\n",
            schema = schema_text(Language::En),
        ),
        (BaselineMode::TaskSchema, Language::De) => format!(
            "Sie sind ein erfahrener Assistent für die mehrsprachige Informationsextraktion. Ihre Aufgabe ist es, Schlüssel-Wert-Paare aus dem unten stehenden Dokumenttext \
             zu extrahieren und in einem gültigen JSON-Objekt zurückzugeben. Die Extraktion muss die Struktur des Dokuments bewahren und die unten stehenden Anforderungen erfüllen.\n\n\
             Zielschlüssel (Pflichtfelder):\n{schema}\n\n\
             {LANGUAGE_RULES_DE}\n\
             Umgang mit fehlenden Werten:\n\
             - Wenn ein Schlüssel relevant ist, aber kein Wert gefunden werden kann, fügen Sie ihn mit einer leeren Zeichenfolge ein: \"\"\n\n\
             Ausgabeformat:\n\
             - Geben Sie ein einzelnes gültiges JSON-Objekt zurück.\n\
             - Geben Sie keine Erklärungen, Markdowns oder zusätzlichen Text zurück - nur das JSON.\n\n\
             Dokumentinhalt:\n{document_text}\n",
            schema = schema_text(Language::De),
        ),
    }
}

/// QA baseline prompt. With `document_text = None` the prompt refers to attached page images.
pub fn baseline_qa_prompt(lang: Language, question: &str, document_text: Option<&str>) -> String {
    match lang {
        Language::En => {
            let source = match document_text {
                Some(_) => "Based on the document text provided",
                None => "Based on the visual document provided",
            };
            let doc = document_text.map(|t| format!("Document Content:\n{t}\n\n")).unwrap_or_default();
            format!(
                "You are a helpful assistant. {source}, answer the given question as accurately as possible.\n\n\
                 Rules:\n\
                 Return only the answer content, with no explanations or commentary.\n\
                 - If the answer is a single value, return it as a plain string.\n\
                 - If the answer includes multiple values (e.g., a list or table), return them as a list of strings.\n\
                 - If no answer can be found, return an empty string: \"\"\n\n\
                 {doc}Question: {question}\n\n\
                 Answer:"
            )
        }
        Language::De => {
            let source = match document_text {
                Some(_) => "Beantworte anhand des bereitgestellten Dokumenttexts",
                None => "Beantworte anhand des bereitgestellten Dokumentbilds",
            };
            let doc = document_text.map(|t| format!("Dokumentinhalt:\n{t}\n\n")).unwrap_or_default();
            format!(
                "Du bist ein hilfreicher Assistent. {source} die gestellte Frage so genau wie möglich.\n\n\
                 Regeln:\n\
                 Gib nur den Antwortinhalt zurück, ohne Erklärungen oder Kommentare.\n\
                 - Besteht die Antwort aus einem einzelnen Wert, gib ihn als einfachen String zurück.\n\
                 - Umfasst die Antwort mehrere Werte (z. B. eine Liste oder Tabelle), gib sie als Liste von Strings zurück.\n\
                 - Wenn keine Antwort gefunden werden kann, gib einen leeren String zurück: \"\"\n\n\
                 {doc}Frage: {question}\n\n\
                 Antwort:"
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn german_schema_prompt_embeds_template() {
        let p = baseline_kvp_prompt(BaselineMode::TaskSchema, Language::De, "Text");
        assert!(p.contains("Zielschlüssel (Pflichtfelder)"));
        assert!(p.contains(schema_text(Language::De)));
    }

    #[test]
    fn english_task_prompt_has_missing_value_rule() {
        let p = baseline_kvp_prompt(BaselineMode::Task, Language::En, "Text");
        assert!(p.contains("include it with an empty string"));
        assert!(!p.contains("Declared Performance"));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("t+s".parse::<BaselineMode>().unwrap(), BaselineMode::TaskSchema);
        assert_eq!(BaselineMode::Task.to_string(), "T");
        assert!("X".parse::<BaselineMode>().is_err());
    }

    #[test]
    fn vision_qa_prompt_has_no_document_block() {
        let p = baseline_qa_prompt(Language::En, "Who is the Manufacturer?", None);
        assert!(p.contains("visual document"));
        assert!(!p.contains("Document Content"));
    }
}
