use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kvp::EvalScores;
use super::qa::QaDocScores;
use crate::schema::Language;

/// Means of the five KVP scores over a set of rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreMeans {
    pub rows: usize,
    pub valid: f64,
    pub key_match: f64,
    pub em: f64,
    pub bleu: f64,
    pub rouge: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MacroSummary {
    pub per_language: BTreeMap<Language, ScoreMeans>,
    pub global: ScoreMeans,
}

/// Means of the three value scores for QA.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QaMeans {
    pub rows: usize,
    pub em: f64,
    pub bleu: f64,
    pub rouge: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QaMacroSummary {
    pub per_language: BTreeMap<Language, QaMeans>,
    pub global: QaMeans,
}

/// Mean of each column per language, then the unweighted mean of the language means.
fn macro_means<const N: usize>(rows: impl Iterator<Item = (Language, [f64; N])>) -> (BTreeMap<Language, (usize, [f64; N])>, (usize, [f64; N])) {
    let mut sums: BTreeMap<Language, (usize, [f64; N])> = BTreeMap::new();
    let mut total_rows = 0;
    for (lang, values) in rows {
        let entry = sums.entry(lang).or_insert((0, [0.0; N]));
        entry.0 += 1;
        for (acc, v) in entry.1.iter_mut().zip(values) {
            *acc += v;
        }
        total_rows += 1;
    }
    let per_language: BTreeMap<Language, (usize, [f64; N])> = sums
        .into_iter()
        .map(|(lang, (n, s))| (lang, (n, s.map(|x| x / n as f64))))
        .collect();
    let mut global = [0.0; N];
    if !per_language.is_empty() {
        for (_, means) in per_language.values() {
            for (acc, v) in global.iter_mut().zip(means) {
                *acc += v;
            }
        }
        let langs = per_language.len() as f64;
        global = global.map(|x| x / langs);
    }
    (per_language, (total_rows, global))
}

fn to_means((rows, [valid, key_match, em, bleu, rouge]): (usize, [f64; 5])) -> ScoreMeans {
    ScoreMeans { rows, valid, key_match, em, bleu, rouge }
}

fn to_qa_means((rows, [em, bleu, rouge]): (usize, [f64; 3])) -> QaMeans {
    QaMeans { rows, em, bleu, rouge }
}

/// Per-language means of (document, language) rows and their unweighted cross-language mean.
/// Zero-padded failure rows count like any other row.
pub fn macro_aggregate(rows: &[EvalScores]) -> MacroSummary {
    let (per_language, global) = macro_means(
        rows.iter().map(|r| (r.language, [f64::from(r.valid), r.key_match, r.em, r.bleu, r.rouge])),
    );
    MacroSummary {
        per_language: per_language.into_iter().map(|(l, m)| (l, to_means(m))).collect(),
        global: to_means(global),
    }
}

pub fn macro_aggregate_qa(rows: &[QaDocScores]) -> QaMacroSummary {
    let (per_language, global) = macro_means(rows.iter().map(|r| (r.language, [r.em, r.bleu, r.rouge])));
    QaMacroSummary {
        per_language: per_language.into_iter().map(|(l, m)| (l, to_qa_means(m))).collect(),
        global: to_qa_means(global),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(doc: &str, lang: Language, v: f64) -> EvalScores {
        EvalScores { doc_name: doc.into(), language: lang, valid: 1, key_match: v, em: v, bleu: v, rouge: v }
    }

    #[test]
    fn single_row_is_itself() {
        let s = macro_aggregate(&[row("a", Language::De, 0.3)]);
        assert_eq!(s.global.em, 0.3);
        assert_eq!(s.per_language[&Language::De].rouge, 0.3);
    }

    #[test]
    fn two_docs_one_language() {
        let s = macro_aggregate(&[row("a", Language::En, 0.2), row("b", Language::En, 0.6)]);
        assert!((s.per_language[&Language::En].em - 0.4).abs() < 1e-15);
    }

    #[test]
    fn language_means_are_averaged_unweighted() {
        let s = macro_aggregate(&[
            row("a", Language::En, 0.4),
            row("a", Language::De, 0.6),
            row("b", Language::De, 0.6),
            row("c", Language::De, 0.6),
        ]);
        assert!((s.global.em - 0.5).abs() < 1e-15);
        assert_eq!(s.global.rows, 4);
    }

    #[test]
    fn empty_input() {
        assert_eq!(macro_aggregate(&[]), MacroSummary::default());
    }
}
