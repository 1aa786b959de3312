//! ROUGE-L F1 (β = 1) over whitespace tokens with Porter stemming.

/// Tokens longer than three characters are stemmed, mirroring the common ROUGE scorer.
const MIN_STEM_LEN: usize = 4;

pub fn stem_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            if t.chars().count() >= MIN_STEM_LEN {
                porter_stemmer::stem(t)
            } else {
                t.to_string()
            }
        })
        .collect()
}

pub fn rouge_l(gt: &str, pred: &str) -> f64 {
    rouge_l_tokens(&stem_tokens(gt), &stem_tokens(pred))
}

pub fn rouge_l_tokens<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> f64 {
    if reference.is_empty() || hypothesis.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(reference, hypothesis);
    if lcs == 0 {
        return 0.0;
    }
    let precision = lcs as f64 / hypothesis.len() as f64;
    let recall = lcs as f64 / reference.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Longest common subsequence length with a rolling single-row table.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[b.len()]
}
