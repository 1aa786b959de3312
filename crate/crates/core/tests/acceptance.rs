//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//! Expected values come from the small reference implementations in this file, never from
//! the library under test.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use dop_core::agent::{Agent, AgentConfig, AgentOutcome, AgentState, AgentStatus, Node, TickClock, UserIntent};
use dop_core::annotations::{generate_qa_dataset, sample_eval_set, KvpAnnotation, QaItem};
use dop_core::ingest::{DocumentAdapters, TextFileExtractor};
use dop_core::llm::{Gateway, LedgerEntry, Pricing, ScriptedBackend, UsageLedger};
use dop_core::metrics::harness::{evaluate_kvp_predictions, Predictions};
use dop_core::metrics::{
    bleu_tokens, clean_json, evaluate_kvp_document, evaluate_nested_values, exact_match, flatten_json, macro_aggregate,
    rouge_l_tokens, unflatten, EvalScores,
};
use dop_core::par::Mode;
use dop_core::report::{ledger_rows, render_report};
use dop_core::schema::{target_key_names, Language};
use dop_core::tools::register_default_tools;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: got {a}, expected {b}"))
}

// ---------------------------------------------------------------------------
// Reference metrics

fn ngrams<'a>(tokens: &[&'a str], n: usize) -> Vec<Vec<&'a str>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
}

fn occurrences(grams: &[Vec<&str>], gram: &[&str]) -> usize {
    grams.iter().filter(|g| g.as_slice() == gram).count()
}

/// Sentence BLEU, uniform 4-gram weights, smoothing method 4 with k = 5.
fn reference_bleu(reference: &[&str], hypothesis: &[&str]) -> f64 {
    let c = hypothesis.len();
    let r = reference.len();
    let mut p = [0.0f64; 4];
    let mut numerators = [0usize; 4];
    let mut denominators = [0usize; 4];
    for n in 1..=4 {
        let hyp = ngrams(hypothesis, n);
        let refs = ngrams(reference, n);
        let mut seen: Vec<&Vec<&str>> = Vec::new();
        let mut clipped = 0;
        for g in &hyp {
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            clipped += occurrences(&hyp, g).min(occurrences(&refs, g));
        }
        numerators[n - 1] = clipped;
        denominators[n - 1] = hyp.len().max(1);
    }
    if numerators[0] == 0 {
        return 0.0;
    }
    let mut v = 1;
    for i in 0..4 {
        p[i] = if numerators[i] == 0 && c > 1 {
            let smoothed = 1.0 / (2f64.powi(v) * 5.0 / (c as f64).ln());
            v += 1;
            smoothed / denominators[i] as f64
        } else {
            numerators[i] as f64 / denominators[i] as f64
        };
    }
    let bp = if c > r {
        1.0
    } else if c == 0 {
        0.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let log_mean: f64 = p.iter().filter(|x| **x > 0.0).map(|x| 0.25 * x.ln()).sum();
    bp * log_mean.exp()
}

fn lcs_memo(a: &[&str], b: &[&str], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if i == a.len() || j == b.len() {
        return 0;
    }
    if let Some(&v) = memo.get(&(i, j)) {
        return v;
    }
    let v = if a[i] == b[j] {
        1 + lcs_memo(a, b, i + 1, j + 1, memo)
    } else {
        lcs_memo(a, b, i + 1, j, memo).max(lcs_memo(a, b, i, j + 1, memo))
    };
    memo.insert((i, j), v);
    v
}

fn reference_rouge_l(reference: &[&str], hypothesis: &[&str]) -> f64 {
    if reference.is_empty() || hypothesis.is_empty() {
        return 0.0;
    }
    let lcs = lcs_memo(reference, hypothesis, 0, 0, &mut HashMap::new()) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / hypothesis.len() as f64;
    let r = lcs / reference.len() as f64;
    2.0 * p * r / (p + r)
}

fn criterion_1() -> Check {
    const VOCAB: [&str; 8] = ["der", "die", "klasse", "a1", "en", "13501-1", "npd", "w3"];
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let pairs = 400;
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let len_a = rng.gen_range(0..=12);
        // Every fourth pair shares its reference so that high-order overlaps are exercised.
        let a: Vec<&str> = (0..len_a).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect();
        let b: Vec<&str> = if i % 4 == 0 {
            let mut b = a.clone();
            if !b.is_empty() && rng.gen_bool(0.5) {
                let k = rng.gen_range(0..b.len());
                b[k] = VOCAB[rng.gen_range(0..VOCAB.len())];
            }
            b
        } else {
            (0..rng.gen_range(0..=12)).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect()
        };
        let em = f64::from(exact_match(&a.join(" "), &b.join(" ")));
        let em_ref = if a == b { 1.0 } else { 0.0 };
        let bleu = bleu_tokens(&a, &b);
        let bleu_ref = reference_bleu(&a, &b);
        let rouge = rouge_l_tokens(&a, &b);
        let rouge_ref = reference_rouge_l(&a, &b);
        for (what, got, want) in [("em", em, em_ref), ("bleu", bleu, bleu_ref), ("rouge", rouge, rouge_ref)] {
            let d = (got - want).abs();
            worst = worst.max(d);
            ensure(d <= 1e-6, || format!("{what} mismatch on {a:?} / {b:?}: {got} vs {want}"))?;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{pairs} pairs, max |delta| {worst:.1e}, {} ms", elapsed.as_millis()))
}

// ---------------------------------------------------------------------------
// Flat KVP scoring

const EPS: f64 = 1e-9;

fn four_tokens(i: usize) -> String {
    format!("v{i}a v{i}b v{i}c v{i}d")
}

fn gt_map(keys: &[String]) -> Map<String, Value> {
    keys.iter().enumerate().map(|(i, k)| (k.clone(), json!(four_tokens(i)))).collect()
}

struct Expected {
    valid: u8,
    key_match: f64,
    em: f64,
    bleu: f64,
    rouge: f64,
}

fn criterion_2() -> Check {
    let keys = target_key_names(Language::De);
    let gt = gt_map(&keys);
    let perfect = Value::Object(gt.clone()).to_string();
    let with = |edits: &[(usize, &str)]| {
        let mut m = gt.clone();
        for (i, v) in edits {
            m.insert(keys[*i].clone(), json!(v));
        }
        Value::Object(m).to_string()
    };

    // Hand-derived partial scores.
    // "v5a v5b v5c v5d x y" against the 4-token truth: p1..p4 = 4/6, 3/5, 2/4, 1/3, no brevity penalty.
    let longer_bleu = (4.0 / 6.0 * 3.0 / 5.0 * 2.0 / 4.0 * 1.0 / 3.0f64).powf(0.25);
    let longer_rouge = 2.0 * (4.0 / 6.0) * 1.0 / (4.0 / 6.0 + 1.0);
    // "v6a v6b" against 4 tokens: precisions 1, 1, then two smoothed zero orders; bp = e^(1 - 4/2).
    let ln2 = 2f64.ln();
    let shorter_bleu = (1.0 - 2.0f64).exp()
        * (1.0f64 * 1.0 * (1.0 / (2.0 * 5.0 / ln2)) * (1.0 / (4.0 * 5.0 / ln2))).powf(0.25);
    let shorter_rouge = 2.0 * 1.0 * 0.5 / 1.5;

    let half: Map<String, Value> = gt.iter().take(6).map(|(k, v)| (k.clone(), v.clone())).collect();
    let upper: Map<String, Value> =
        gt.iter().map(|(k, v)| (k.to_uppercase(), json!(format!("  {}  ", v.as_str().unwrap().to_uppercase())))).collect();
    let mut extra = gt.clone();
    extra.insert("Zusatzfeld".into(), json!("nicht gefragt"));

    let mut keys14 = keys.clone();
    keys14.push("Zusatzschlüssel Eins".into());
    keys14.push("Zusatzschlüssel Zwei".into());
    let gt14 = gt_map(&keys14);

    let cases: Vec<(&str, String, &Map<String, Value>, Expected)> = vec![
        ("perfect", perfect.clone(), &gt, Expected { valid: 1, key_match: 12.0 / (12.0 + EPS), em: 1.0, bleu: 1.0, rouge: 1.0 }),
        ("invalid json", "{\"Hersteller\": \"x\"".into(), &gt, Expected { valid: 0, key_match: 0.0, em: 0.0, bleu: 0.0, rouge: 0.0 }),
        (
            "six of twelve keys",
            Value::Object(half).to_string(),
            &gt,
            Expected { valid: 1, key_match: 6.0 / (12.0 + EPS), em: 0.5, bleu: 0.5, rouge: 0.5 },
        ),
        (
            "three wrong values",
            with(&[(0, "ganz anders hier jetzt"), (1, "ganz anders hier jetzt"), (2, "ganz anders hier jetzt")]),
            &gt,
            Expected { valid: 1, key_match: 12.0 / (12.0 + EPS), em: 0.75, bleu: 0.75, rouge: 0.75 },
        ),
        (
            "fourteen keys",
            Value::Object(gt14.clone()).to_string(),
            &gt14,
            Expected { valid: 1, key_match: 14.0 / (14.0 + EPS), em: 1.0, bleu: 1.0, rouge: 1.0 },
        ),
        (
            "partial values",
            with(&[(5, "v5a v5b v5c v5d x y"), (6, "v6a v6b")]),
            &gt,
            Expected {
                valid: 1,
                key_match: 12.0 / (12.0 + EPS),
                em: 10.0 / 12.0,
                bleu: (10.0 + longer_bleu + shorter_bleu) / 12.0,
                rouge: (10.0 + longer_rouge + shorter_rouge) / 12.0,
            },
        ),
        (
            "case and spacing",
            Value::Object(upper).to_string(),
            &gt,
            Expected { valid: 1, key_match: 12.0 / (12.0 + EPS), em: 1.0, bleu: 1.0, rouge: 1.0 },
        ),
        (
            "extra key ignored",
            Value::Object(extra).to_string(),
            &gt,
            Expected { valid: 1, key_match: 12.0 / (12.0 + EPS), em: 1.0, bleu: 1.0, rouge: 1.0 },
        ),
        (
            "fenced with prose",
            format!("Hier ist das Ergebnis:\n```json\n{perfect}\n```\nViele Grüße"),
            &gt,
            Expected { valid: 1, key_match: 12.0 / (12.0 + EPS), em: 1.0, bleu: 1.0, rouge: 1.0 },
        ),
        ("empty object", "{}".into(), &gt, Expected { valid: 1, key_match: 0.0, em: 0.0, bleu: 0.0, rouge: 0.0 }),
    ];

    for (i, (name, raw, truth, want)) in cases.iter().enumerate() {
        let got: EvalScores = evaluate_kvp_document(&format!("doc{i}"), raw, truth, Language::De);
        ensure(got.valid == want.valid, || format!("{name}: valid {} != {}", got.valid, want.valid))?;
        close(got.key_match, want.key_match, 1e-12, &format!("{name} key_match"))?;
        close(got.em, want.em, 1e-12, &format!("{name} em"))?;
        close(got.bleu, want.bleu, 1e-12, &format!("{name} bleu"))?;
        close(got.rouge, want.rouge, 1e-12, &format!("{name} rouge"))?;
    }
    Ok(format!("{} documents", cases.len()))
}

// ---------------------------------------------------------------------------
// Nested scoring

fn criterion_3() -> Check {
    let parent = "Erklärte Leistung";
    let gt = json!({
        "Klasse der Brutto-Trockenrohdichte": "1,2",
        "Form und Ausbildung": {"Bezeichnung": "Planziegel", "Lochanteil von - bis [Vol %]": "15 - 50"},
        "Wasserdampfdurchlässigkeit (Tabellenwert)": "5/10",
        "Maße": {"Länge [mm]": "248"},
        "mittlere Druckfestigkeit [N/mm²]": "12,5",
        "Wärmedurchlasswiderstand": "0,5",
        "Brandverhalten": "Klasse A1 nach EN 13501-1",
        "Wasserdichtheit": {"Stufe": "Stufe W3 nach Norm", "Dauer": "zwölf Stunden bei Prüfung"}
    });
    let pred = json!({
        "Brutto-Trockenrohdichte": "1,2",
        "Form und Ausbildung": "Planziegel",
        "Wasserdampfdurchlässigkeit": "5/10",
        "Maße": "248 x 175 x 249",
        "mittlere Druckfestigkeit": "12,5",
        "Brandverhalten": "Klasse A1 nach EN 13501-1",
        "Wasserdichtheit": {"Stufe": "Stufe W3 nach Norm", "Dauer": "zwölf Stunden bei Prüfung"}
    });
    let mismatched = [
        "Erklärte Leistung/Klasse der Brutto-Trockenrohdichte",
        "Erklärte Leistung/Form und Ausbildung/Bezeichnung",
        "Erklärte Leistung/Form und Ausbildung/Lochanteil von - bis [Vol %]",
        "Erklärte Leistung/Wasserdampfdurchlässigkeit (Tabellenwert)",
        "Erklärte Leistung/Maße/Länge [mm]",
        "Erklärte Leistung/mittlere Druckfestigkeit [N/mm²]",
        "Erklärte Leistung/Wärmedurchlasswiderstand",
    ];
    let matching = [
        "Erklärte Leistung/Brandverhalten",
        "Erklärte Leistung/Wasserdichtheit/Stufe",
        "Erklärte Leistung/Wasserdichtheit/Dauer",
    ];

    let scores = evaluate_nested_values(&pred, &gt, parent, Language::De);
    for path in mismatched {
        ensure(!scores.matched.iter().any(|m| m.path == path), || format!("{path} received credit"))?;
        ensure(scores.missing.iter().any(|m| m == path), || format!("{path} not reported missing"))?;
    }
    for path in matching {
        let m = scores.matched.iter().find(|m| m.path == path).ok_or_else(|| format!("{path} not matched"))?;
        ensure(m.scores.em == 1.0 && m.scores.bleu == 1.0 && m.scores.rouge == 1.0, || format!("{path}: {:?}", m.scores))?;
    }
    ensure(scores.matched.len() == matching.len(), || format!("{} matched paths", scores.matched.len()))?;
    // Z = max(|matched|, 1): only matched paths count.
    close(scores.em, 1.0, 1e-12, "em")?;

    // A prediction that only has the misaligned keys earns nothing.
    let only_bad = json!({
        "Brutto-Trockenrohdichte": "1,2",
        "Form und Ausbildung": "Planziegel",
        "mittlere Druckfestigkeit": "12,5"
    });
    let zero = evaluate_nested_values(&only_bad, &gt, parent, Language::De);
    ensure(zero.matched.is_empty() && zero.em == 0.0 && zero.bleu == 0.0 && zero.rouge == 0.0, || format!("{zero:?}"))?;
    Ok(format!("{} mismatches without credit, {} aligned paths at 1.0", mismatched.len(), matching.len()))
}

// ---------------------------------------------------------------------------
// Flattening

/// Path reconstruction written independently of the library: split on "/", peel "[i]" suffixes.
fn rebuild(pairs: &[(String, Value)]) -> Value {
    fn put(slot: &mut Value, steps: &[(String, Vec<usize>)], leaf: Value) {
        let Some(((key, indices), rest)) = steps.split_first() else {
            *slot = leaf;
            return;
        };
        if !slot.is_object() {
            *slot = json!({});
        }
        let mut cur = slot.as_object_mut().unwrap().entry(key.clone()).or_insert(Value::Null);
        for &i in indices {
            if !cur.is_array() {
                *cur = json!([]);
            }
            let arr = cur.as_array_mut().unwrap();
            while arr.len() <= i {
                arr.push(Value::Null);
            }
            cur = &mut arr[i];
        }
        put(cur, rest, leaf);
    }
    let mut root = Value::Null;
    for (path, leaf) in pairs {
        let steps: Vec<(String, Vec<usize>)> = path
            .split('/')
            .map(|seg| {
                let mut name = seg;
                let mut idx = Vec::new();
                while let Some(open) = name.rfind('[').filter(|_| name.ends_with(']')) {
                    idx.push(name[open + 1..name.len() - 1].parse().unwrap());
                    name = &name[..open];
                }
                idx.reverse();
                (name.to_string(), idx)
            })
            .collect();
        put(&mut root, &steps, leaf.clone());
    }
    root
}

fn random_value(rng: &mut ChaCha8Rng, depth: usize) -> Value {
    let leaf = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
        0 => json!(format!("wert {}", rng.gen_range(0..100))),
        1 => json!(rng.gen_range(0..1000)),
        _ => json!(rng.gen_bool(0.5)),
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..4) {
        0 => leaf(rng),
        1 => Value::Array((0..rng.gen_range(1..4)).map(|_| random_value(rng, depth - 1)).collect()),
        _ => random_object(rng, depth - 1),
    }
}

fn random_object(rng: &mut ChaCha8Rng, depth: usize) -> Value {
    let mut m = Map::new();
    for i in 0..rng.gen_range(1..5) {
        m.insert(format!("Schlüssel {i}{}", rng.gen_range(0..10)), random_value(rng, depth));
    }
    Value::Object(m)
}

fn criterion_4() -> Check {
    let dp = json!({
        "Brandverhalten": "Klasse A1",
        "Wasserdichtheit": {"Stufe": "W3", "Dauer": "12h"},
        "Mechanische Festigkeit": "hoch"
    });
    let want = vec![
        ("Declared Performance/Brandverhalten".to_string(), json!("Klasse A1")),
        ("Declared Performance/Wasserdichtheit/Stufe".to_string(), json!("W3")),
        ("Declared Performance/Wasserdichtheit/Dauer".to_string(), json!("12h")),
        ("Declared Performance/Mechanische Festigkeit".to_string(), json!("hoch")),
    ];
    let got = flatten_json(&dp, "Declared Performance");
    ensure(got == want, || format!("flattened {got:?}"))?;

    let sig = json!({"Signatories": [{"Name": "G. Wolff"}]});
    let got = flatten_json(&sig, "Signature");
    ensure(got == vec![("Signature/Signatories[0]/Name".to_string(), json!("G. Wolff"))], || format!("flattened {got:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 0..100 {
        // Depth counts object and array levels below the root, at most four.
        let original = random_object(&mut rng, 3);
        let flat = flatten_json(&original, "");
        ensure(rebuild(&flat) == original, || format!("object {n}: reference rebuild differs for {original}"))?;
        ensure(unflatten(&flat) == original, || format!("object {n}: unflatten differs for {original}"))?;
    }
    Ok("appendix examples exact, 100 random round trips".into())
}

// ---------------------------------------------------------------------------
// QA generation

fn bilingual_doc(doc: &str, dp_leaves: usize, sig_leaves: usize) -> Vec<KvpAnnotation> {
    let en = target_key_names(Language::En);
    let de = target_key_names(Language::De);
    en.iter()
        .zip(&de)
        .map(|(ke, kd)| {
            let (ve, vd) = if ke == "Declared Performance" {
                let e: Map<String, Value> = (0..dp_leaves).map(|i| (format!("Property {i}"), json!(format!("P{i}")))).collect();
                let d: Map<String, Value> = (0..dp_leaves).map(|i| (format!("Eigenschaft {i}"), json!(format!("P{i}")))).collect();
                (Value::Object(e), Value::Object(d))
            } else if ke == "Signature" {
                let names: Vec<Value> = (0..sig_leaves.saturating_sub(1)).map(|i| json!({"Name": format!("Person {i}")})).collect();
                (
                    json!({"Signatories": names, "Place and Date of Issue": "Berlin, 2023"}),
                    json!({"Unterzeichner": names, "Ort und Datum der Ausstellung": "Berlin, 2023"}),
                )
            } else {
                (json!(format!("{ke} of {doc}")), json!(format!("{kd} von {doc}")))
            };
            KvpAnnotation {
                doc_name: doc.into(),
                doc_lang: "de".into(),
                key_en: ke.clone(),
                key_de: kd.clone(),
                value_en: ve,
                value_de: vd,
            }
        })
        .collect()
}

fn criterion_5() -> Check {
    let mut anns = bilingual_doc("a.pdf", 10, 3);
    anns.extend(bilingual_doc("b.pdf", 1, 2));
    let items = generate_qa_dataset(&anns, Mode::Sequential);

    let mut base: BTreeMap<(String, Language), usize> = BTreeMap::new();
    let mut nested: BTreeMap<(String, Language, String), usize> = BTreeMap::new();
    for q in &items {
        if q.key == q.parent_key {
            *base.entry((q.doc_name.clone(), q.user_language)).or_default() += 1;
        } else {
            *nested.entry((q.doc_name.clone(), q.user_language, q.parent_key.clone())).or_default() += 1;
        }
    }
    ensure(base.len() == 4 && base.values().all(|&n| n == 12), || format!("base counts {base:?}"))?;

    let seed = 1234;
    let sampled = sample_eval_set(&items, seed);
    ensure(sampled.iter().all(|s| items.contains(s)), || "sample is not a subset".into())?;
    let base_kept = sampled.iter().filter(|q| q.key == q.parent_key).count();
    ensure(base_kept == 48, || format!("{base_kept} base questions kept"))?;
    let mut kept: BTreeMap<(String, Language, String), usize> = BTreeMap::new();
    for q in sampled.iter().filter(|q| q.key != q.parent_key) {
        *kept.entry((q.doc_name.clone(), q.user_language, q.parent_key.clone())).or_default() += 1;
    }
    for (group, &available) in &nested {
        let k = kept.get(group).copied().unwrap_or(0);
        ensure(k == available.min(2), || format!("{group:?}: kept {k} of {available}"))?;
    }
    let a_de = sampled.iter().filter(|q| q.doc_name == "a.pdf" && q.user_language == Language::De).count();
    ensure(a_de == 16, || format!("doc a (de) sampled {a_de}, expected 12 + 2 + 2"))?;

    let bytes = |v: &[QaItem]| serde_json::to_vec(v).unwrap();
    ensure(bytes(&sampled) == bytes(&sample_eval_set(&items, seed)), || "same seed, different output".into())?;
    ensure(bytes(&items) == bytes(&generate_qa_dataset(&anns, Mode::available())), || "generation is order dependent".into())?;
    Ok(format!(
        "{} generated, {} sampled; full-corpus totals not checked (annotation corpus not in the workspace)",
        items.len(),
        sampled.len()
    ))
}

// ---------------------------------------------------------------------------
// Agent state machine

const DOC: &str = "Leistungserklärung Nr. 017. Hersteller: Muster Baustoffe GmbH. Die Leistung des Produkts \
                   entspricht der erklärten Leistung. Brandverhalten Klasse E. Wärmeleitfähigkeit 0,035.";

/// Edges of the status graph, written out independently of the library.
const ALLOWED: [(AgentStatus, AgentStatus); 6] = [
    (AgentStatus::Plan, AgentStatus::NeedTool),
    (AgentStatus::Plan, AgentStatus::Respond),
    (AgentStatus::Plan, AgentStatus::End),
    (AgentStatus::NeedTool, AgentStatus::Plan),
    (AgentStatus::Respond, AgentStatus::Success),
    (AgentStatus::Respond, AgentStatus::Plan),
];

fn decide(tool: &str, input: Value) -> String {
    json!({"reasoning": format!("next: {tool}"), "need_tool": true, "tool": tool, "tool_input": input}).to_string()
}

const RESPOND: &str = r#"{"reasoning": "verified result available", "need_tool": false}"#;

fn run_scripted(doc: &Path, backend: Arc<ScriptedBackend>, state: AgentState) -> AgentOutcome {
    let gateway = Gateway::new(backend, Arc::new(UsageLedger::default()));
    let adapters = Arc::new(DocumentAdapters::new(Arc::new(TextFileExtractor)));
    let registry = Arc::new(register_default_tools(gateway.clone(), adapters).expect("registry"));
    let agent = Agent::new(registry, gateway, AgentConfig::default()).with_clock(Arc::new(TickClock::default()));
    let mut state = state;
    state.pdf_path = doc.to_path_buf();
    agent.run(state)
}

fn kvp_state() -> AgentState {
    AgentState::new("Extract the key-value pairs from this document.", "")
        .with_intent(UserIntent::KvpExtraction)
        .with_user_language(Language::En)
}

fn happy_path(doc: &Path) -> (AgentOutcome, Arc<ScriptedBackend>) {
    let de: Map<String, Value> = target_key_names(Language::De).into_iter().map(|k| (k, json!("Muster"))).collect();
    let en: Map<String, Value> = target_key_names(Language::En).into_iter().map(|k| (k, json!("Muster"))).collect();
    let backend = Arc::new(ScriptedBackend::new());
    for d in [
        decide("check_if_scanned", json!({})),
        decide("extract_text_direct", json!({})),
        decide("detect_language", json!({"target": "document"})),
        decide("get_user_target_keys", json!({})),
        decide("extract_key_values", json!({})),
        decide("verify_extraction", json!({})),
        decide("translate_text", json!({"kind": "kvps"})),
        RESPOND.to_string(),
    ] {
        backend.push_text("planner", d);
    }
    backend.push_text("tool/extract_key_values", format!("```json\n{}\n```", Value::Object(de)));
    backend.push_text("tool/verify_extraction", r#"{"verified": true, "notes": "grounded"}"#);
    backend.push_text("tool/translate_text", Value::Object(en).to_string());
    (run_scripted(doc, backend.clone(), kvp_state()), backend)
}

fn transitions_ok(outcome: &AgentOutcome) -> Result<usize, String> {
    for r in &outcome.trace {
        ensure(ALLOWED.contains(&(r.status_before, r.status_after)), || {
            format!("illegal transition {} -> {}", r.status_before, r.status_after)
        })?;
    }
    Ok(outcome.trace.len())
}

fn timed<T>(f: impl FnOnce() -> T) -> Result<T, String> {
    let started = Instant::now();
    let out = f();
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("scenario took {elapsed:?}"))?;
    Ok(out)
}

fn criterion_6(doc: &Path) -> Check {
    let mut steps = 0;

    // (a) happy path in rule order.
    let (outcome, _) = timed(|| happy_path(doc))?;
    ensure(outcome.status == AgentStatus::Success, || format!("happy path ended {}", outcome.status))?;
    let tools: Vec<&str> = outcome.state.tool_history.iter().map(|r| r.tool_name.as_str()).collect();
    let order = [
        "check_if_scanned",
        "extract_text_direct",
        "detect_language",
        "get_user_target_keys",
        "extract_key_values",
        "verify_extraction",
        "translate_text",
    ];
    ensure(tools == order, || format!("tool order {tools:?}"))?;
    steps += transitions_ok(&outcome)?;

    // (b) exact repeat of tool and input.
    let backend = Arc::new(ScriptedBackend::new());
    for _ in 0..6 {
        backend.push_text("planner", decide("check_if_scanned", json!({})));
    }
    let outcome = timed(|| run_scripted(doc, backend, kvp_state()))?;
    ensure(outcome.status == AgentStatus::End, || format!("repeat run ended {}", outcome.status))?;
    let planner_cycles: Vec<_> = outcome.trace.iter().filter(|r| r.node == Node::Planner).collect();
    // The first repeat is proposed in planner cycle 2; END must follow within two more cycles.
    let end_cycle = planner_cycles.iter().position(|r| r.status_after == AgentStatus::End).map(|i| i + 1);
    ensure(end_cycle.is_some_and(|c| c <= 2 + 2), || format!("END in planner cycle {end_cycle:?}"))?;
    ensure(
        outcome.state.end_reason.as_deref().is_some_and(|r| r.contains("loop")),
        || format!("end reason {:?}", outcome.state.end_reason),
    )?;
    steps += transitions_ok(&outcome)?;

    // (c) one malformed decision recovers, two in a row end the run.
    let backend = Arc::new(ScriptedBackend::new());
    backend.push_text("planner", "I would start by checking the modality.");
    backend.push_text("planner/recovery", decide("check_if_scanned", json!({})));
    backend.push_text("planner", "{\"reasoning\": \"text next\", \"need_tool\": tru");
    backend.push_text("planner/recovery", "still not a decision");
    let outcome = timed(|| run_scripted(doc, backend.clone(), kvp_state()))?;
    ensure(outcome.state.tool_history.first().is_some_and(|r| r.tool_name == "check_if_scanned"), || {
        "first malformed response was not recovered".into()
    })?;
    ensure(outcome.status == AgentStatus::End, || format!("double failure ended {}", outcome.status))?;
    ensure(
        outcome.state.end_reason.as_deref().is_some_and(|r| r.contains("unparseable")),
        || format!("end reason {:?}", outcome.state.end_reason),
    )?;
    let recoveries = backend.requests().iter().filter(|r| r.call_site == "planner/recovery").count();
    ensure(recoveries == 2, || format!("{recoveries} recovery prompts"))?;
    steps += transitions_ok(&outcome)?;

    Ok(format!("3 scenarios, {steps} traced transitions all legal"))
}

// ---------------------------------------------------------------------------
// JSON validity

fn criterion_7(doc: &Path) -> Check {
    let corpus: [(&str, bool); 20] = [
        (r#"{"Hersteller": "Muster GmbH"}"#, true),
        ("```json\n{\"Hersteller\": \"Muster GmbH\"}\n```", true),
        ("```\n{\"Hersteller\": \"Muster GmbH\"}\n```", true),
        ("Here is the extracted JSON:\n{\"Hersteller\": \"Muster GmbH\"}", true),
        ("Sure! {\"Hersteller\": \"Muster GmbH\"} Let me know if you need more.", true),
        (r#"{"Pfad": "C:\Programme\Leistung"}"#, true),
        (r#"{"Norm": "EN 13163\:2012"}"#, true),
        ("```json\n{\"Hersteller\": \"Muster GmbH\"}", true),
        (r#"{"Erklärte Leistung": {"Brandverhalten": "A1"}}"#, true),
        (r#"{"Hinweis": "Klammern } und { im Text"}"#, true),
        (r#"{"Zitat": "er sagte \"ja\""}"#, true),
        ("{\"a\": 1} und danach {\"b\": 2}", true),
        (r#"{"Hersteller": "Muster GmbH""#, false),
        (r#"{"Erklärte Leistung": {"Brandverhalten": "A1"}"#, false),
        (r#"{"Hersteller": "Muster"#, false),
        ("", false),
        ("I could not find any values in the document.", false),
        (r#"["Muster GmbH", "EN 13163"]"#, false),
        ("{'Hersteller': 'Muster GmbH'}", false),
        (r#"{"Hersteller": "Muster GmbH",}"#, false),
    ];
    for (i, (raw, want)) in corpus.iter().enumerate() {
        let got = clean_json(raw).is_some();
        ensure(got == *want, || format!("item {i} {raw:?}: valid={got}, expected {want}"))?;
    }

    let (outcome, backend) = happy_path(doc);
    ensure(outcome.state.tool_history.iter().all(|r| r.success), || "a scripted tool call failed".into())?;
    ensure(
        !backend.requests().iter().any(|r| r.call_site == "planner/recovery"),
        || "a planner decision needed recovery".into(),
    )?;
    let answer = outcome.final_answer.as_ref().ok_or("no final answer")?;
    let truth: Map<String, Value> = target_key_names(Language::En).into_iter().map(|k| (k, json!("Muster"))).collect();
    let scores = evaluate_kvp_document("agent", &answer.to_string(), &truth, Language::En);
    ensure(scores.valid == 1, || "agent answer is not valid JSON".into())?;
    let valid = corpus.iter().filter(|(_, v)| *v).count();
    Ok(format!("{valid} valid / {} invalid as expected; agent output valid=1", corpus.len() - valid))
}

// ---------------------------------------------------------------------------
// Zero padding and aggregation

fn criterion_8() -> Check {
    let docs = ["d1.pdf", "d2.pdf", "d3.pdf", "d4.pdf", "d5.pdf"];
    let en_keys = target_key_names(Language::En);
    let de_keys = target_key_names(Language::De);
    let anns: Vec<KvpAnnotation> = docs
        .iter()
        .flat_map(|d| {
            en_keys.iter().zip(&de_keys).enumerate().map(move |(i, (ke, kd))| KvpAnnotation {
                doc_name: d.to_string(),
                doc_lang: "de".into(),
                key_en: ke.clone(),
                key_de: kd.clone(),
                value_en: json!(format!("{d} value {i} in english")),
                value_de: json!(format!("{d} wert {i} auf deutsch")),
            })
        })
        .collect();
    // Document j keeps the first 12 - 2j keys and garbles one value, so rows differ.
    let preds_for = |lang: Language, keys: &[String]| -> Predictions {
        docs.iter()
            .enumerate()
            .map(|(j, d)| {
                let mut m = Map::new();
                for (i, k) in keys.iter().enumerate().take(12 - 2 * j) {
                    let v = anns.iter().find(|a| a.doc_name == *d && a.key(lang) == k).unwrap().value(lang).clone();
                    m.insert(k.clone(), if i == 0 && j % 2 == 1 { json!("falsch") } else { v });
                }
                (d.to_string(), Value::Object(m).to_string())
            })
            .collect()
    };
    let full = vec![(Language::En, preds_for(Language::En, &en_keys)), (Language::De, preds_for(Language::De, &de_keys))];
    let before = evaluate_kvp_predictions(&anns, &full, false, Mode::Sequential);

    // Brute-force per-language then global means.
    let metric = |r: &EvalScores| [f64::from(r.valid), r.key_match, r.em, r.bleu, r.rouge];
    let mut per_lang: BTreeMap<Language, (f64, [f64; 5])> = BTreeMap::new();
    for r in &before.fixed {
        let e = per_lang.entry(r.language).or_insert((0.0, [0.0; 5]));
        e.0 += 1.0;
        for (acc, v) in e.1.iter_mut().zip(metric(r)) {
            *acc += v;
        }
    }
    let summary = macro_aggregate(&before.fixed);
    let names = ["valid", "key_match", "em", "bleu", "rouge"];
    let means = |m: &dop_core::metrics::ScoreMeans| [m.valid, m.key_match, m.em, m.bleu, m.rouge];
    let mut global = [0.0; 5];
    for (lang, (n, sums)) in &per_lang {
        let got = means(&summary.per_language[lang]);
        for k in 0..5 {
            close(got[k], sums[k] / n, 1e-12, &format!("{lang} {}", names[k]))?;
            global[k] += sums[k] / n / per_lang.len() as f64;
        }
    }
    let got_global = means(&summary.global);
    for k in 0..5 {
        close(got_global[k], global[k], 1e-12, &format!("global {}", names[k]))?;
    }

    // Dropping d2 from the German file zero-pads its row.
    let removed = before.fixed.iter().find(|r| r.doc_name == "d2.pdf" && r.language == Language::De).unwrap().clone();
    let mut partial = full.clone();
    partial[1].1.remove("d2.pdf");
    let after = evaluate_kvp_predictions(&anns, &partial, false, Mode::Sequential);
    ensure(after.errors.len() == 1, || format!("{} error records", after.errors.len()))?;
    let after_summary = macro_aggregate(&after.fixed);
    let n_de = per_lang[&Language::De].0;
    let drop = metric(&removed);
    let de_before = means(&summary.per_language[&Language::De]);
    let de_after = means(&after_summary.per_language[&Language::De]);
    let g_after = means(&after_summary.global);
    for k in 0..5 {
        close(de_before[k] - de_after[k], drop[k] / n_de, 1e-12, &format!("de drop {}", names[k]))?;
        close(got_global[k] - g_after[k], drop[k] / n_de / 2.0, 1e-12, &format!("global drop {}", names[k]))?;
    }
    Ok(format!("{} rows; removal drop matches analytic value", before.fixed.len()))
}

// ---------------------------------------------------------------------------
// Ledger arithmetic

fn ledger_with(pricing: Pricing, calls: &[(u64, u64)]) -> UsageLedger {
    let ledger = UsageLedger::new(pricing);
    for &(i, o) in calls {
        ledger.record(LedgerEntry { call_site: "planner".into(), input_tokens: i, output_tokens: o, wall_ms: 30_000 });
    }
    ledger
}

fn criterion_9() -> Check {
    let pricing = Pricing { input_per_1m: 2.5, output_per_1m: 10.0 };
    let price = |i: u64, o: u64| i as f64 * 2.5 / 1e6 + o as f64 * 10.0 / 1e6;
    let a = ledger_with(pricing, &[(600_000, 200_000), (400_000, 300_000)]);
    let b = ledger_with(pricing, &[(2_000_000, 250_000)]);
    close(a.cost(), price(1_000_000, 500_000), 1e-9, "cost a")?;
    close(b.cost(), price(2_000_000, 250_000), 1e-9, "cost b")?;

    // Scaling every call by k scales the cost by k.
    for k in [2u64, 3, 7] {
        let scaled = ledger_with(pricing, &[(600_000 * k, 200_000 * k), (400_000 * k, 300_000 * k)]);
        close(scaled.cost(), k as f64 * a.cost(), 1e-9, &format!("cost x{k}"))?;
    }
    let merged = a.clone();
    merged.merge(&b);
    close(merged.cost(), a.cost() + b.cost(), 1e-9, "merged cost")?;

    let runs = vec![("Agent".to_string(), a.clone()), ("Baseline".to_string(), b.clone())];
    let rows = ledger_rows(&runs);
    let total = rows.iter().find(|r| r.label == "Total").ok_or("no Total row")?;
    close(total.total_tokens_m, 1.5 + 2.25, 1e-12, "total tokens (M)")?;
    close(total.total_cost_usd, a.cost() + b.cost(), 1e-9, "total cost")?;
    close(total.runtime_min, 1.5, 1e-12, "total runtime (min)")?;

    let report = render_report(&runs, &[]);
    for column in ["Total Tokens (M)", "Total Cost (USD)", "Runtime (min)"] {
        ensure(report.contains(column), || format!("report lacks column {column:?}"))?;
    }
    ensure(render_report(&[], &[]).contains("Total Cost (USD)"), || "empty report lacks the table header".into())?;
    Ok(format!("Total row {:.2} M tokens, {:.2} USD", total.total_tokens_m, total.total_cost_usd))
}

fn main() {
    let dir = tempfile::tempdir().expect("tempdir");
    let doc = dir.path().join("dop.txt");
    std::fs::write(&doc, DOC).expect("write fixture");

    let criteria: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("metric oracle equivalence", Box::new(criterion_1)),
        ("flat KVP scoring fidelity", Box::new(criterion_2)),
        ("nested KVP scoring fidelity", Box::new(criterion_3)),
        ("flattening", Box::new(criterion_4)),
        ("QA generation counts", Box::new(criterion_5)),
        ("agent state machine", Box::new(|| criterion_6(&doc))),
        ("JSON validity cleaning", Box::new(|| criterion_7(&doc))),
        ("zero-padding and aggregation", Box::new(criterion_8)),
        ("ledger arithmetic", Box::new(criterion_9)),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)) {
            Ok(Ok(detail)) => println!("PASS {} {name}: {detail}", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {} {name}: panicked", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
