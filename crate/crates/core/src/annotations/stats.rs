use serde::{Deserialize, Serialize};

use super::{KvpAnnotation, QaItem};
use crate::metrics::flatten::flatten_json;
use crate::schema::Language;

/// Dataset size summary; rows are counted per language.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub flat_kvps: usize,
    pub nested_expanded: usize,
    pub qa_initial: usize,
    pub qa_nested: usize,
    pub qa_sampled: usize,
}

/// Counts KVP rows (one per annotation and language), KVP rows with nested values expanded
/// into leaves, base QA items, all QA items, and sampled QA items.
pub fn dataset_stats(kvps: &[KvpAnnotation], qas: &[QaItem], sampled: &[QaItem]) -> DatasetStats {
    let nested_expanded = kvps
        .iter()
        .flat_map(|a| Language::ALL.map(|l| a.value(l)))
        .map(|v| flatten_json(v, "").len().max(1))
        .sum();
    DatasetStats {
        flat_kvps: kvps.len() * Language::ALL.len(),
        nested_expanded,
        qa_initial: qas.iter().filter(|q| !q.is_nested()).count(),
        qa_nested: qas.len(),
        qa_sampled: sampled.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::{generate_qa_dataset, sample_eval_set};
    use crate::par::Mode;
    use crate::schema::TARGET_KEYS;
    use serde_json::json;

    #[test]
    fn empty_dataset_is_all_zero() {
        assert_eq!(dataset_stats(&[], &[], &[]), DatasetStats::default());
    }

    #[test]
    fn one_document_twelve_scalar_keys() {
        let anns: Vec<KvpAnnotation> = TARGET_KEYS
            .iter()
            .map(|k| KvpAnnotation {
                doc_name: "d.pdf".into(),
                doc_lang: "de".into(),
                key_en: k.en.into(),
                key_de: k.de.into(),
                value_en: json!("x"),
                value_de: json!("y"),
            })
            .collect();
        let qas = generate_qa_dataset(&anns, Mode::Sequential);
        let sampled = sample_eval_set(&qas, 0);
        let s = dataset_stats(&anns, &qas, &sampled);
        assert_eq!(s, DatasetStats { flat_kvps: 24, nested_expanded: 24, qa_initial: 24, qa_nested: 24, qa_sampled: 24 });
    }
}
