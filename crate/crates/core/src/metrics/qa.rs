use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::kvp::{value_scores, ValueScores};
use crate::annotations::{Answer, QaItem};
use crate::schema::Language;

/// Lookup key for a predicted answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QaKey {
    pub doc_name: String,
    pub language: Language,
    pub question: String,
}

impl QaKey {
    pub fn of(item: &QaItem) -> Self {
        Self { doc_name: item.doc_name.clone(), language: item.user_language, question: item.question.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaRow {
    pub doc_name: String,
    pub language: Language,
    pub key: String,
    pub question: String,
    pub answered: bool,
    pub nested: bool,
    pub em: f64,
    pub bleu: f64,
    pub rouge: f64,
}

/// Unweighted per-(document, language) means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaDocScores {
    pub doc_name: String,
    pub language: Language,
    pub questions: usize,
    pub em: f64,
    pub bleu: f64,
    pub rouge: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QaEvaluation {
    pub rows: Vec<QaRow>,
    pub averages: Vec<QaDocScores>,
}

/// Merges predictions into the ground truth (missing answers become empty strings), scores
/// every question, and averages per document and language.
pub fn evaluate_qa(pred: &HashMap<QaKey, Answer>, gt: &[QaItem]) -> QaEvaluation {
    let rows: Vec<QaRow> = gt
        .iter()
        .map(|item| {
            let answer = pred.get(&QaKey::of(item));
            let pred_text = answer.map(Answer::comparison_text).unwrap_or_default();
            let ValueScores { em, bleu, rouge } = value_scores(&item.value, &pred_text, item.user_language);
            QaRow {
                doc_name: item.doc_name.clone(),
                language: item.user_language,
                key: item.key.clone(),
                question: item.question.clone(),
                answered: answer.is_some(),
                nested: item.is_nested(),
                em,
                bleu,
                rouge,
            }
        })
        .collect();
    let averages = average_rows(&rows);
    QaEvaluation { rows, averages }
}

/// Per-(doc, language) means in first-appearance order.
pub fn average_rows(rows: &[QaRow]) -> Vec<QaDocScores> {
    let mut order: Vec<(String, Language)> = Vec::new();
    let mut sums: HashMap<(String, Language), (usize, f64, f64, f64)> = HashMap::new();
    for r in rows {
        let key = (r.doc_name.clone(), r.language);
        let entry = sums.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (0, 0.0, 0.0, 0.0)
        });
        entry.0 += 1;
        entry.1 += r.em;
        entry.2 += r.bleu;
        entry.3 += r.rouge;
    }
    order
        .into_iter()
        .map(|key| {
            let (n, em, bleu, rouge) = sums[&key];
            let n_f = n as f64;
            QaDocScores { doc_name: key.0, language: key.1, questions: n, em: em / n_f, bleu: bleu / n_f, rouge: rouge / n_f }
        })
        .collect()
}
