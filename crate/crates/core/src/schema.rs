//! The twelve DoP target keys, their bilingual names, and the EN/DE schema templates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Languages supported by the templates and the language detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    De,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported language code {0:?} (expected \"en\" or \"de\")")]
pub struct UnsupportedLanguage(pub String);

impl Language {
    pub const ALL: [Language; 2] = [Language::En, Language::De];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::De => "de",
        }
    }

    /// Upper-case language name as used in the "return values in ..." constraint.
    pub fn constraint_name(self) -> &'static str {
        match self {
            Language::En => "ENGLISH",
            Language::De => "DEUTSCH",
        }
    }
}

impl FromStr for Language {
    type Err = UnsupportedLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let code = s.trim().to_ascii_lowercase();
        // Accept region-qualified tags such as "de-CH" or "en_GB".
        let primary = code.split(['-', '_']).next().unwrap_or("");
        match primary {
            "en" => Ok(Language::En),
            "de" => Ok(Language::De),
            _ => Err(UnsupportedLanguage(s.to_string())),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Semantic role of a target key; drives question phrasing and evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyRole {
    Factual,
    Entity,
    Avcp,
    /// Open-schema value stored as a nested JSON object.
    Nested,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetKey {
    pub en: &'static str,
    pub de: &'static str,
    pub role: KeyRole,
}

impl TargetKey {
    pub fn name(&self, lang: Language) -> &'static str {
        match lang {
            Language::En => self.en,
            Language::De => self.de,
        }
    }

    pub fn is_nested(&self) -> bool {
        self.role == KeyRole::Nested
    }

    pub fn is_declared_performance(&self) -> bool {
        self.en == DECLARED_PERFORMANCE.en
    }

    pub fn is_signature(&self) -> bool {
        self.en == SIGNATURE.en
    }
}

const DECLARED_PERFORMANCE: TargetKey = TargetKey {
    en: "Declared Performance",
    de: "Erklärte Leistung",
    role: KeyRole::Nested,
};

const SIGNATURE: TargetKey = TargetKey {
    en: "Signature",
    de: "Unterschrift",
    role: KeyRole::Nested,
};

pub const TARGET_KEYS: [TargetKey; 12] = [
    TargetKey { en: "Declaration Number", de: "Erklärungsnummer", role: KeyRole::Factual },
    TargetKey {
        en: "Unique Identification Code of the Product-Type",
        de: "Eindeutiger Identifikationscode des Produkttyps",
        role: KeyRole::Factual,
    },
    TargetKey { en: "Intended Use(s)", de: "Vorgesehene Verwendung", role: KeyRole::Factual },
    TargetKey { en: "Manufacturer", de: "Hersteller", role: KeyRole::Entity },
    TargetKey { en: "Authorised Representative", de: "Bevollmächtigter", role: KeyRole::Entity },
    TargetKey {
        en: "System(s) of Assessment and Verification of Constancy of Performance (AVCP)",
        de: "System(e) zur Bewertung und Überprüfung der Leistungsbeständigkeit (AVCP)",
        role: KeyRole::Avcp,
    },
    TargetKey { en: "Harmonised Standard", de: "Harmonisierte Norm", role: KeyRole::Factual },
    TargetKey { en: "Notified Body", de: "Notifizierte Stelle", role: KeyRole::Entity },
    DECLARED_PERFORMANCE,
    TargetKey {
        en: "Appropriate Technical Documentation and/or Specific Technical Documentation",
        de: "Geeignete technische Dokumentation und/oder besondere technische Dokumentation",
        role: KeyRole::Factual,
    },
    TargetKey { en: "Declaration Statement", de: "Erklärungstext", role: KeyRole::Factual },
    SIGNATURE,
];

/// Nested sub-keys every Signature value is expected to carry, as (EN, DE) path suffixes.
pub const SIGNATURE_REQUIRED_PATHS: [(&str, &str); 4] = [
    ("Signatories[0]/Name", "Unterzeichner[0]/Name"),
    ("Signatories[0]/Position", "Unterzeichner[0]/Position"),
    ("Place and Date of Issue", "Ort und Datum der Ausstellung"),
    ("Notice", "Hinweis"),
];

/// Transliterates German umlauts the way some annotation files spell them ("Erklaerte").
pub(crate) fn fold_umlauts(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            'ä' => out.push_str("ae"),
            'ö' => out.push_str("oe"),
            'ü' => out.push_str("ue"),
            'Ä' => out.push_str("Ae"),
            'Ö' => out.push_str("Oe"),
            'Ü' => out.push_str("Ue"),
            'ß' => out.push_str("ss"),
            _ => out.push(c),
        }
    }
    out.to_lowercase()
}

/// Looks up a target key by its English or German name. Matching is case-insensitive and
/// tolerates umlaut transliterations.
pub fn find_target_key(name: &str) -> Option<&'static TargetKey> {
    let wanted = fold_umlauts(name.trim());
    TARGET_KEYS
        .iter()
        .find(|k| fold_umlauts(k.en) == wanted || fold_umlauts(k.de) == wanted)
}

/// Whether `name` (in either language) is one of the open-schema keys evaluated path-wise.
pub fn is_nested_key(name: &str) -> bool {
    find_target_key(name).is_some_and(TargetKey::is_nested)
}

pub fn target_key_names(lang: Language) -> Vec<String> {
    TARGET_KEYS.iter().map(|k| k.name(lang).to_string()).collect()
}

const SCHEMA_EN: &str = r#"{
  "Declaration Number": "<string>",
  "Unique Identification Code of the Product-Type": "<string>",
  "Intended Use(s)": "<string>",
  "Manufacturer": "<string>",
  "Authorised Representative": "<string>",
  "System(s) of Assessment and Verification of Constancy of Performance (AVCP)": "<string or list of strings>",
  "Harmonised Standard": "<string>",
  "Notified Body": "<string>",
  "Declared Performance": {
    "<property_name_1>": "<string>",
    "<property_name_2>": {
      "<sub_property_1>": "<string>",
      "<sub_property_2>": "<string>"
    },
    "<property_name_3>": {
      "<nested_sub_property_1>": "<string>",
      "<nested_sub_property_2>": "<string>"
    },
    "...": "..."
  },
  "Appropriate Technical Documentation and/or Specific Technical Documentation": "<string>",
  "Declaration Statement": "<string>",
  "Signature": {
    "Signatories": [
      {
        "Name": "<string>",
        "Position": "<string>"
      }
    ],
    "Place and Date of Issue": "<string>",
    "Notice": "<string>"
  }
}"#;

const SCHEMA_DE: &str = r#"{
  "Erklärungsnummer": "<string>",
  "Eindeutiger Identifikationscode des Produkttyps": "<string>",
  "Vorgesehene Verwendung": "<string>",
  "Hersteller": "<string>",
  "Bevollmächtigter": "<string>",
  "System(e) zur Bewertung und Überprüfung der Leistungsbeständigkeit (AVCP)": "<string or list of strings>",
  "Harmonisierte Norm": "<string>",
  "Notifizierte Stelle": "<string>",
  "Erklärte Leistung": {
    "<property_name_1>": "<string>",
    "<property_name_2>": {
      "<sub_property_1>": "<string>",
      "<sub_property_2>": "<string>"
    },
    "<property_name_3>": {
      "<nested_sub_property_1>": "<string>",
      "<nested_sub_property_2>": "<string>"
    },
    "...": "..."
  },
  "Geeignete technische Dokumentation und/oder besondere technische Dokumentation": "<string>",
  "Erklärungstext": "<string>",
  "Unterschrift": {
    "Unterzeichner": [
      {
        "Name": "<string>",
        "Position": "<string>"
      }
    ],
    "Ort und Datum der Ausstellung": "<string>",
    "Hinweis": "<string>"
  }
}"#;

/// Pretty-printed schema template embedded verbatim into extraction prompts.
pub fn schema_text(lang: Language) -> &'static str {
    match lang {
        Language::En => SCHEMA_EN,
        Language::De => SCHEMA_DE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Scalar,
    Nested,
}

/// Per-language view of the twelve keys and the kind of value each carries.
#[derive(Debug, Clone)]
pub struct SchemaTemplate {
    pub language: Language,
    pub keys: Vec<(String, ValueKind)>,
}

impl SchemaTemplate {
    pub fn for_language(language: Language) -> Self {
        let parsed: Value = serde_json::from_str(schema_text(language)).expect("embedded schema is valid JSON");
        let keys = parsed
            .as_object()
            .expect("schema is an object")
            .iter()
            .map(|(k, v)| {
                let kind = if v.is_object() { ValueKind::Nested } else { ValueKind::Scalar };
                (k.clone(), kind)
            })
            .collect();
        Self { language, keys }
    }

    pub fn as_json(&self) -> Value {
        serde_json::from_str(schema_text(self.language)).expect("embedded schema is valid JSON")
    }

    /// Restricts the template to the given key paths (top-level component matched).
    /// Falls back to the full template when no key matches.
    pub fn subset_json(&self, keys: &[String]) -> Value {
        let full = self.as_json();
        let obj = full.as_object().expect("schema is an object");
        let mut out = serde_json::Map::new();
        for key in keys {
            let top = key.split('/').next().unwrap_or(key).trim();
            if let Some(def) = find_target_key(top) {
                let name = def.name(self.language);
                if let Some(v) = obj.get(name) {
                    out.insert(name.to_string(), v.clone());
                    continue;
                }
            }
            out.insert(key.clone(), Value::String("<string>".into()));
        }
        if out.is_empty() {
            full
        } else {
            Value::Object(out)
        }
    }
}
