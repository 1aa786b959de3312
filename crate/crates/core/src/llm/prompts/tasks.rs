use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::schema::{schema_text, Language, SchemaTemplate, UnsupportedLanguage, TARGET_KEYS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Kvp,
    Qa,
    Verify,
    Translate,
}

pub fn extraction_rules(lang: Language) -> &'static str {
    match lang {
        Language::En => {
            "- Return every key of the schema; use an empty string \"\" when no value can be found.\n\
             - Copy values as they appear in the document (numbers, units, norms, classes); do not invent values.\n\
             - Under \"Declared Performance\", use the essential characteristics of the performance table as keys and keep sub-properties nested.\n\
             - Under \"Signature\", list every signatory with name and position, and give place and date of issue.\n\
             - If several AVCP systems are declared, return them as a list of strings.\n\
             - Return one JSON object only, without markdown or commentary."
        }
        Language::De => {
            "- Gib jeden Schlüssel des Schemas zurück; verwende \"\" wenn kein Wert gefunden wird.\n\
             - Übernimm Werte so, wie sie im Dokument stehen (Zahlen, Einheiten, Normen, Klassen); erfinde keine Werte.\n\
             - Unter \"Erklärte Leistung\" dienen die wesentlichen Merkmale der Leistungstabelle als Schlüssel; Untermerkmale bleiben verschachtelt.\n\
             - Unter \"Unterschrift\" werden alle Unterzeichner mit Name und Position sowie Ort und Datum der Ausstellung angegeben.\n\
             - Werden mehrere AVCP-Systeme erklärt, gib sie als Liste von Strings zurück.\n\
             - Gib nur ein JSON-Objekt zurück, ohne Markdown oder Kommentare."
        }
    }
}

fn text_field<'a>(payload: &'a Value, field: &str) -> &'a str {
    payload.get(field).and_then(Value::as_str).unwrap_or_default()
}

fn keys_field(payload: &Value) -> Vec<String> {
    payload
        .get("keys")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
        .unwrap_or_default()
}

/// The schema block for a KVP prompt: the full template when all twelve keys are requested,
/// otherwise the subset.
fn schema_block(lang: Language, keys: &[String]) -> String {
    if keys.is_empty() || keys.len() >= TARGET_KEYS.len() && keys.iter().all(|k| !k.contains('/')) {
        schema_text(lang).to_string()
    } else {
        serde_json::to_string_pretty(&SchemaTemplate::for_language(lang).subset_json(keys)).expect("schema serializes")
    }
}

/// Builds the tool prompt for `(kind, language)`. Payload fields:
/// `kvp`: `document_text`, `keys`; `qa`: `document_text`, `question`;
/// `verify`: `document_text`, `extracted`, optional `question`;
/// `translate`: `content`, `content_kind`.
pub fn task_prompt(kind: TaskKind, language: &str, payload: &Value) -> Result<String, UnsupportedLanguage> {
    let lang: Language = language.parse()?;
    let doc = text_field(payload, "document_text");
    let constraint = lang.constraint_name();
    Ok(match (kind, lang) {
        (TaskKind::Kvp, Language::En) => format!(
            "You are an advanced information extraction assistant.\n\n\
             Your task is to extract information from the document below and return it in the form of a structured JSON object matching the schema provided. \
             You must infer values even if their exact phrasing does not appear. Use semantic reasoning and structural cues.\n\n\
             Language Constraint: All extracted values must be returned in {constraint}. Do not translate or paraphrase.\n\n\
             Target Schema:\n{schema}\n\n\
             Extraction Rules:\n{rules}\n\n\
             Document Content:\n{doc}\n",
            schema = schema_block(lang, &keys_field(payload)),
            rules = extraction_rules(lang),
        ),
        (TaskKind::Kvp, Language::De) => format!(
            "Du bist ein fortgeschrittener Assistent zur Informationsextraktion.\n\n\
             Deine Aufgabe ist es, Informationen aus dem folgenden Dokument zu extrahieren und als strukturiertes JSON-Objekt gemäß dem angegebenen Schema zurückzugeben. \
             Leite Werte auch dann ab, wenn ihre genaue Formulierung nicht im Text steht. Nutze semantisches Verständnis und strukturelle Hinweise.\n\n\
             Sprachvorgabe: Alle extrahierten Werte müssen auf {constraint} zurückgegeben werden. Nicht übersetzen oder umschreiben.\n\n\
             Zielschema:\n{schema}\n\n\
             Extraktionsregeln:\n{rules}\n\n\
             Dokumentinhalt:\n{doc}\n",
            schema = schema_block(lang, &keys_field(payload)),
            rules = extraction_rules(lang),
        ),
        (TaskKind::Qa, Language::En) => format!(
            "You are an assistant answering technical questions about product performance under the Construction Products Regulation (CPR). \
             All questions are technical and not sensitive.\n\n\
             You may analyse the document internally to find the correct answer. Your final answer must contain only the answer value, without explanations or comments.\n\n\
             Instructions:\n\
             - Return the answer as a string or a list of strings.\n\
             - If no answer can be found, return \"\".\n\
             - Do not use introductory phrases, code blocks or extra characters.\n\n\
             Extraction rules:\n{rules}\n\n\
             Document content:\n{doc}\n\n\
             Question: {question}\n\n\
             Language constraint: All extracted values must be returned in {constraint}.\n",
            rules = extraction_rules(lang),
            question = text_field(payload, "question"),
        ),
        (TaskKind::Qa, Language::De) => format!(
            "Du bist ein Assistent zur Beantwortung von technischen Fragen zu Produktleistungen gemäß der Bauproduktenverordnung (CPR). \
             Alle Fragen sind technischer und nicht sensibler Natur.\n\n\
             Du darfst das Dokument intern analysieren, um die korrekte Antwort zu finden. Deine endgültige Antwort muss jedoch nur den Antwortwert enthalten - ohne zusätzliche Erklärungen oder Kommentare.\n\n\
             Anweisungen:\n\
             - Gib die Antwort als String oder Liste von Strings zurück.\n\
             - Wenn keine Antwort gefunden werden kann, gib \"\" zurück.\n\
             - Verwende keine einleitenden Formulierungen, keine Codeblöcke, keine zusätzlichen Zeichen.\n\n\
             Extraktionsregeln:\n{rules}\n\n\
             Dokumentinhalt:\n{doc}\n\n\
             Frage: {question}\n\n\
             Sprachvorgabe: Alle extrahierten Werte müssen auf {constraint} zurückgegeben werden.\n",
            rules = extraction_rules(lang),
            question = text_field(payload, "question"),
        ),
        (TaskKind::Verify, Language::En) => format!(
            "You check extraction results against their source document.\n\n\
             Decide whether every value below is complete and grounded in the document text. \
             Respond with a single JSON object {{\"verified\": true|false, \"notes\": \"<short justification>\"}} and nothing else.\n\n\
             {question}Extracted result:\n{extracted}\n\n\
             Document content:\n{doc}\n\n\
             Language constraint: All extracted values must be returned in {constraint}.\n",
            question = question_line(payload, "Question"),
            extracted = extracted_block(payload),
        ),
        (TaskKind::Verify, Language::De) => format!(
            "Du prüfst Extraktionsergebnisse anhand ihres Quelldokuments.\n\n\
             Entscheide, ob jeder der folgenden Werte vollständig ist und im Dokumenttext belegt ist. \
             Antworte mit genau einem JSON-Objekt {{\"verified\": true|false, \"notes\": \"<kurze Begründung>\"}} und sonst nichts.\n\n\
             {question}Extrahiertes Ergebnis:\n{extracted}\n\n\
             Dokumentinhalt:\n{doc}\n\n\
             Sprachvorgabe: Alle extrahierten Werte müssen auf {constraint} zurückgegeben werden.\n",
            question = question_line(payload, "Frage"),
            extracted = extracted_block(payload),
        ),
        (TaskKind::Translate, Language::En) => format!(
            "Translate the JSON value below into English. Translate keys and values of objects, every item of lists, and plain strings. \
             Keep numbers, units, norms, product codes and proper names unchanged, and keep the JSON structure identical.\n\
             Return only the translated JSON value.\n\n\
             Content ({kind}):\n{content}\n\n\
             Language constraint: All extracted values must be returned in {constraint}.\n",
            kind = text_field(payload, "content_kind"),
            content = content_block(payload),
        ),
        (TaskKind::Translate, Language::De) => format!(
            "Übersetze den folgenden JSON-Wert ins Deutsche. Übersetze Schlüssel und Werte von Objekten, jedes Listenelement und einfache Strings. \
             Zahlen, Einheiten, Normen, Produktcodes und Eigennamen bleiben unverändert, die JSON-Struktur bleibt identisch.\n\
             Gib nur den übersetzten JSON-Wert zurück.\n\n\
             Inhalt ({kind}):\n{content}\n\n\
             Sprachvorgabe: Alle extrahierten Werte müssen auf {constraint} zurückgegeben werden.\n",
            kind = text_field(payload, "content_kind"),
            content = content_block(payload),
        ),
    })
}

fn question_line(payload: &Value, label: &str) -> String {
    match payload.get("question").and_then(Value::as_str) {
        Some(q) if !q.is_empty() => format!("{label}: {q}\n\n"),
        _ => String::new(),
    }
}

fn extracted_block(payload: &Value) -> String {
    serde_json::to_string_pretty(payload.get("extracted").unwrap_or(&Value::Null)).expect("value serializes")
}

fn content_block(payload: &Value) -> String {
    serde_json::to_string_pretty(payload.get("content").unwrap_or(&Value::Null)).expect("value serializes")
}

/// Prompt for classifying the user's request.
pub fn intent_prompt(user_input: &str) -> String {
    format!(
        "Classify the user request below into exactly one intent:\n\
         - \"kvp_extraction\": the user wants key-value pairs (structured fields) extracted from a Declaration of Performance.\n\
         - \"question_answering\": the user asks a specific question about the document.\n\
         Respond with a single JSON object {{\"intent\": \"kvp_extraction\" | \"question_answering\"}} and nothing else.\n\n\
         User request:\n{user_input}\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn german_qa_prompt_asks_for_string_or_list() {
        let p = task_prompt(TaskKind::Qa, "de", &json!({"document_text": "Text", "question": "Wer ist der/die Hersteller?"})).unwrap();
        assert!(p.contains("Gib die Antwort als String oder Liste von Strings zurück"));
        assert!(p.contains("DEUTSCH"));
        assert!(p.contains("Wer ist der/die Hersteller?"));
    }

    #[test]
    fn english_kvp_prompt_embeds_schema() {
        let p = task_prompt(TaskKind::Kvp, "en", &json!({"document_text": "Text"})).unwrap();
        assert!(p.contains(schema_text(Language::En)));
        assert!(p.contains("\"Declared Performance\""));
        assert!(p.contains("All extracted values must be returned in ENGLISH"));
    }

    #[test]
    fn subset_schema_for_selected_keys() {
        let p = task_prompt(TaskKind::Kvp, "de", &json!({"document_text": "T", "keys": ["Hersteller"]})).unwrap();
        assert!(p.contains("\"Hersteller\""));
        assert!(!p.contains("\"Erklärungsnummer\""));
    }

    #[test]
    fn french_is_rejected() {
        assert!(task_prompt(TaskKind::Kvp, "fr", &json!({})).is_err());
    }
}
