//! Evaluation metrics: output cleaning, value normalization, EM/BLEU/ROUGE-L, flat and
//! nested KVP scoring, QA scoring, aggregation and error logging.

mod aggregate;
mod bleu;
mod clean;
mod errors;
pub mod flatten;
pub mod harness;
mod kvp;
mod normalize;
mod qa;
mod rouge;

pub use aggregate::{macro_aggregate, macro_aggregate_qa, MacroSummary, QaMacroSummary, QaMeans, ScoreMeans};
pub use bleu::{bleu, bleu_tokens, tokenize};
pub use clean::{canonical_input, canonical_json, clean_json, clean_json_value, outermost_object, repair_escapes, strip_code_fences};
pub use errors::{write_error_jsonl, ErrorLog, ErrorRecord, ErrorStage};
pub use flatten::{flatten_json, unflatten, FlatMap, PATH_SEPARATOR};
pub use kvp::{
    evaluate_kvp_document, evaluate_kvp_parsed, evaluate_nested_key, evaluate_nested_values, key_match_ratio, parse_nested,
    value_scores, EvalScores, NestedKeyScores, PathScore, ValueScores, EXPECTED_KEYS, KEY_MATCH_EPSILON,
};
pub use normalize::normalize_value;
pub use qa::{average_rows, evaluate_qa, QaDocScores, QaEvaluation, QaKey, QaRow};
pub use rouge::{lcs_len, rouge_l, rouge_l_tokens, stem_tokens};

/// 1 iff the two (already normalized) strings are byte-equal.
pub fn exact_match(gt: &str, pred: &str) -> u8 {
    u8::from(gt == pred)
}
