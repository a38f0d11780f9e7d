//! Okapi BM25 baseline with text normalization for product data.
//!
//! ```text
//! score(q, d) = sum_{t in q} idf(t) * tf(t, d) * (k1 + 1)
//!                                   / (tf(t, d) + k1 * (1 - b + b * |d| / avgdl))
//! idf(t)      = ln(1 + (N - n(t) + 0.5) / (n(t) + 0.5))
//! ```
//!
//! The `ln(1 + x)` idf never goes negative, unlike the plain Robertson form.

use std::collections::HashMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{sort_ranked, ScoredCandidate, SourceTag};

/// Text clean-up steps, applied in this order: JSON flattening,
/// transliteration to ASCII, lowercasing, unit expansion rules, whitespace
/// collapsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRules {
    pub lowercase: bool,
    /// `(regex, replacement)` pairs; replacements may use `$1`-style groups.
    pub unit_expansion: Vec<(String, String)>,
    pub json_flatten: bool,
    pub non_english_transliteration: bool,
}

const NUM: &str = r"(\d+(?:\.\d+)?)";

fn default_unit_rules() -> Vec<(String, String)> {
    let mut rules = Vec::new();
    for (unit_pat, unit) in [(r#"(?:''|")"#, "inches"), ("'", "feet")] {
        for (letter, dim) in [("l", "length"), ("w", "width"), ("h", "height"), ("d", "depth")] {
            rules.push((
                format!(r"(?i){NUM}\s*{unit_pat}\s*{letter}\b"),
                format!("{dim} $1 {unit}"),
            ));
        }
        rules.push((format!(r"(?i){NUM}\s*{unit_pat}"), format!("$1 {unit}")));
    }
    for (abbr, word) in [
        ("lbs?", "pounds"),
        ("oz", "ounces"),
        ("kg", "kilograms"),
        ("cm", "centimeters"),
        ("mm", "millimeters"),
    ] {
        rules.push((format!(r"(?i){NUM}\s*{abbr}\b"), format!("$1 {word}")));
    }
    rules.push((format!(r"{NUM}\s*%"), "$1 percent".into()));
    rules.push(("&".into(), " and ".into()));
    rules
}

impl Default for NormalizationRules {
    fn default() -> Self {
        Self {
            lowercase: true,
            unit_expansion: default_unit_rules(),
            json_flatten: true,
            non_english_transliteration: true,
        }
    }
}

/// Compiled form of [`NormalizationRules`].
#[derive(Debug, Clone)]
pub struct Normalizer {
    rules: NormalizationRules,
    compiled: Vec<(Regex, String)>,
}

impl Normalizer {
    pub fn new(rules: &NormalizationRules) -> Result<Self> {
        let compiled = rules
            .unit_expansion
            .iter()
            .map(|(pat, rep)| {
                Regex::new(pat)
                    .map(|re| (re, rep.clone()))
                    .map_err(|e| Error::Config(format!("bad normalization pattern `{pat}`: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            rules: rules.clone(),
            compiled,
        })
    }

    pub fn normalize(&self, text: &str) -> String {
        let mut s = if self.rules.json_flatten {
            flatten_json(text).unwrap_or_else(|| text.to_string())
        } else {
            text.to_string()
        };
        if self.rules.non_english_transliteration && !s.is_ascii() {
            s = deunicode::deunicode(&s);
        }
        if self.rules.lowercase {
            s = s.to_lowercase();
        }
        for (re, rep) in &self.compiled {
            if re.is_match(&s) {
                s = re.replace_all(&s, rep.as_str()).into_owned();
            }
        }
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

pub fn normalize(text: &str, rules: &NormalizationRules) -> Result<String> {
    Ok(Normalizer::new(rules)?.normalize(text))
}

/// `{"a": "x", "b": {"c": 1}}` becomes `a: x, b.c: 1`. Returns `None` unless
/// the whole text is a JSON object.
fn flatten_json(text: &str) -> Option<String> {
    let trimmed = text.trim();
    if !trimmed.starts_with('{') {
        return None;
    }
    let value: serde_json::Value = serde_json::from_str(trimmed).ok()?;
    let obj = value.as_object()?;
    let mut parts = Vec::new();
    for (k, v) in obj {
        flatten_into(k, v, &mut parts);
    }
    Some(parts.join(", "))
}

fn flatten_into(key: &str, value: &serde_json::Value, out: &mut Vec<String>) {
    use serde_json::Value;
    match value {
        Value::Null => {}
        Value::Object(map) => {
            for (k, v) in map {
                flatten_into(&format!("{key}.{k}"), v, out);
            }
        }
        Value::Array(items) => {
            let vals: Vec<String> = items.iter().filter_map(scalar_text).collect();
            if !vals.is_empty() {
                out.push(format!("{key}: {}", vals.join(" ")));
            }
        }
        scalar => {
            if let Some(s) = scalar_text(scalar) {
                out.push(format!("{key}: {s}"));
            }
        }
    }
}

fn scalar_text(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Lowercased runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.5, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1.is_finite() && k1 >= 0.0) {
            return Err(Error::Config(format!("k1 must be non-negative, got {k1}")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::Config(format!("b must lie in [0, 1], got {b}")));
        }
        Ok(Self { k1, b })
    }
}

/// Document frequencies, lengths and term counts of a tokenized corpus.
#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    ids: Vec<String>,
    positions: HashMap<String, usize>,
    term_freqs: Vec<HashMap<String, u32>>,
    lengths: Vec<usize>,
    doc_freq: HashMap<String, usize>,
    avg_len: f64,
}

impl CorpusStats {
    pub fn build<I, S>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<String>)>,
        S: Into<String>,
    {
        let mut stats = CorpusStats::default();
        for (id, tokens) in docs {
            let id = id.into();
            if stats.positions.insert(id.clone(), stats.ids.len()).is_some() {
                return Err(Error::DuplicateId(id));
            }
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for t in tf.keys() {
                *stats.doc_freq.entry(t.clone()).or_default() += 1;
            }
            stats.ids.push(id);
            stats.lengths.push(tokens.len());
            stats.term_freqs.push(tf);
        }
        let total: usize = stats.lengths.iter().sum();
        stats.avg_len = if stats.ids.is_empty() {
            0.0
        } else {
            total as f64 / stats.ids.len() as f64
        };
        Ok(stats)
    }

    pub fn doc_count(&self) -> usize {
        self.ids.len()
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<usize> {
        self.positions.get(doc_id).map(|&i| self.lengths[i])
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_freq(term) as f64;
        let total = self.doc_count() as f64;
        (1.0 + (total - n + 0.5) / (n + 0.5)).ln()
    }

    fn score_at(&self, pos: usize, query_terms: &[String], params: Bm25Params) -> f64 {
        let ratio = if self.avg_len > 0.0 {
            self.lengths[pos] as f64 / self.avg_len
        } else {
            1.0
        };
        let norm = params.k1 * (1.0 - params.b + params.b * ratio);
        query_terms
            .iter()
            .filter_map(|t| self.term_freqs[pos].get(t).map(|&tf| (t, f64::from(tf))))
            .fold(0.0, |acc, (t, tf)| acc + self.idf(t) * tf * (params.k1 + 1.0) / (tf + norm))
    }
}

/// BM25 score of one document. Repeated query terms count once per repeat.
pub fn bm25_score(
    query_terms: &[String],
    doc_id: &str,
    stats: &CorpusStats,
    params: Bm25Params,
) -> Result<f64> {
    let pos = *stats
        .positions
        .get(doc_id)
        .ok_or_else(|| Error::UnknownId(doc_id.to_string()))?;
    Ok(stats.score_at(pos, query_terms, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source: SourceTag,
    pub text: String,
}

/// A normalized, tokenized corpus ready for ranking.
#[derive(Debug, Clone)]
pub struct Bm25Corpus {
    normalizer: Normalizer,
    stats: CorpusStats,
    sources: Vec<SourceTag>,
}

impl Bm25Corpus {
    pub fn build(docs: &[Document], rules: &NormalizationRules) -> Result<Self> {
        let normalizer = Normalizer::new(rules)?;
        let stats = CorpusStats::build(
            docs.iter()
                .map(|d| (d.id.clone(), tokenize(&normalizer.normalize(&d.text)))),
        )?;
        Ok(Self {
            normalizer,
            stats,
            sources: docs.iter().map(|d| d.source).collect(),
        })
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn query_terms(&self, query: &str) -> Vec<String> {
        tokenize(&self.normalizer.normalize(query))
    }
}

/// Scores every document for `query` and sorts best first, ties by ascending
/// document id. The BM25 value is reported as both the lexical and the
/// combined score.
pub fn bm25_rank(query: &str, corpus: &Bm25Corpus, params: Bm25Params) -> Result<Vec<ScoredCandidate>> {
    if corpus.stats.doc_count() == 0 {
        return Err(Error::Invalid("cannot rank against an empty corpus".into()));
    }
    let terms = corpus.query_terms(query);
    let mut scored: Vec<ScoredCandidate> = (0..corpus.stats.doc_count())
        .map(|pos| {
            let s = corpus.stats.score_at(pos, &terms, params);
            ScoredCandidate {
                candidate_id: corpus.stats.ids[pos].clone(),
                dense_score: 0.0,
                lexical_score: s,
                combined: s,
                source: corpus.sources[pos],
            }
        })
        .collect();
    sort_ranked(&mut scored);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(text: &str) -> String {
        normalize(text, &NormalizationRules::default()).unwrap()
    }

    fn terms(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn dimension_shorthand() {
        assert_eq!(norm("3'' l x 4'' w"), "length 3 inches x width 4 inches");
        assert_eq!(norm("3\u{2033} l \u{00d7} 4\u{2033} w"), "length 3 inches x width 4 inches");
        assert_eq!(norm("height:23\""), "height:23 inches");
        assert_eq!(norm("weighs 5 lbs & 2oz"), "weighs 5 pounds and 2 ounces");
        assert_eq!(norm("6' h"), "height 6 feet");
    }

    #[test]
    fn json_attributes_flatten() {
        let rules = NormalizationRules {
            lowercase: false,
            ..NormalizationRules::default()
        };
        assert_eq!(
            normalize(r#"{"color":"red","size":"XL"}"#, &rules).unwrap(),
            "color: red, size: XL"
        );
        assert_eq!(
            normalize(r#"{"dims":{"w":2,"h":3},"tags":["a","b"],"x":null}"#, &rules).unwrap(),
            "dims.w: 2, dims.h: 3, tags: a b"
        );
        assert_eq!(normalize("{not json", &rules).unwrap(), "{not json");
    }

    #[test]
    fn canonical_text_unchanged() {
        let s = "maximum speed is 12 mph";
        assert_eq!(norm(s), s);
        assert_eq!(norm("Crème   brûlée"), "creme brulee");
    }

    #[test]
    fn tokenizer_splits_punctuation() {
        assert_eq!(terms("How fast, does-it go?"), ["how", "fast", "does", "it", "go"]);
    }

    #[test]
    fn single_doc_hand_value() {
        let stats = CorpusStats::build([("d", terms("red car"))]).unwrap();
        let s = bm25_score(&terms("car"), "d", &stats, Bm25Params::default()).unwrap();
        assert!((s - (4f64 / 3.0).ln()).abs() < 1e-12);
        assert!((s - 0.287682).abs() < 1e-6);
    }

    #[test]
    fn absent_terms_and_unknown_doc() {
        let stats = CorpusStats::build([("d", terms("red car"))]).unwrap();
        assert_eq!(bm25_score(&terms("blue"), "d", &stats, Bm25Params::default()).unwrap(), 0.0);
        assert!(matches!(
            bm25_score(&terms("car"), "nope", &stats, Bm25Params::default()),
            Err(Error::UnknownId(_))
        ));
    }

    #[test]
    fn b_zero_ignores_length() {
        let stats = CorpusStats::build([
            ("short", terms("lamp")),
            ("long", terms("lamp with a very long description attached")),
            ("other", terms("chair")),
        ])
        .unwrap();
        let p = Bm25Params::new(1.2, 0.0).unwrap();
        let a = bm25_score(&terms("lamp"), "short", &stats, p).unwrap();
        let b = bm25_score(&terms("lamp"), "long", &stats, p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn params_validation() {
        assert!(Bm25Params::new(-1.0, 0.5).is_err());
        assert!(Bm25Params::new(1.0, 1.5).is_err());
    }

    #[test]
    fn rank_edge_cases() {
        let docs = vec![
            Document {
                id: "a".into(),
                source: SourceTag::Review,
                text: "glow lasts thirty minutes".into(),
            },
            Document {
                id: "b".into(),
                source: SourceTag::Cqa,
                text: "plug it into the tv".into(),
            },
        ];
        let corpus = Bm25Corpus::build(&docs, &NormalizationRules::default()).unwrap();
        let out = bm25_rank("plug it into the tv", &corpus, Bm25Params::default()).unwrap();
        assert_eq!(out[0].candidate_id, "b");
        assert_eq!(out[1].combined, 0.0);

        let out = bm25_rank("???", &corpus, Bm25Params::default()).unwrap();
        assert!(out.iter().all(|s| s.combined == 0.0));
        assert_eq!(out[0].candidate_id, "a");

        let empty = Bm25Corpus::build(&[], &NormalizationRules::default()).unwrap();
        assert!(bm25_rank("x", &empty, Bm25Params::default()).is_err());
    }

    #[test]
    fn duplicate_doc_ids() {
        assert!(CorpusStats::build([("a", vec![]), ("a", vec![])]).is_err());
    }
}
