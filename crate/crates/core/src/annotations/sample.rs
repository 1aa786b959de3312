use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::QaItem;

/// Nested questions kept per parent key, document and language.
pub const NESTED_PER_PARENT: usize = 2;

/// 64-bit FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
fn fnv1a(parts: &[&str]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in part.bytes().chain(std::iter::once(0xff)) {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Evaluation subset: every base question, plus at most two seeded-random nested questions
/// per parent key for each (document, language). Input order is preserved.
pub fn sample_eval_set(items: &[QaItem], seed: u64) -> Vec<QaItem> {
    let mut groups: BTreeMap<(&str, &str, &str), Vec<usize>> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        if item.is_nested() {
            groups
                .entry((item.doc_name.as_str(), item.user_language.code(), item.parent_key.as_str()))
                .or_default()
                .push(i);
        }
    }

    let mut keep: HashSet<usize> = HashSet::new();
    for ((doc, lang, parent), mut indices) in groups {
        // Each group draws from its own stream so selection does not depend on group order.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&[doc, lang, parent]));
        indices.shuffle(&mut rng);
        keep.extend(indices.into_iter().take(NESTED_PER_PARENT));
    }

    items
        .iter()
        .enumerate()
        .filter(|(i, item)| !item.is_nested() || keep.contains(i))
        .map(|(_, item)| item.clone())
        .collect()
}
