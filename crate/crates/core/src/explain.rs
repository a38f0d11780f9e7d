//! Token-level explanation of a lexical match.
//!
//! Every vocabulary term shared by the query and candidate sparse vectors
//! contributes `q_weight * c_weight` to the lexical score. A term is flagged
//! as an expansion on a side when it does not occur among that side's
//! surface tokens.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::HybridEntry;
use crate::scoring::{dot_dense, dot_sparse, interpolate};

/// Token id to surface string.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary(HashMap<u32, String>);

impl Vocabulary {
    pub fn get(&self, id: u32) -> Option<&str> {
        self.0.get(&id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// One token per line; the line number is the id.
    pub fn from_lines(text: &str) -> Self {
        Self(
            text.lines()
                .enumerate()
                .map(|(i, t)| (i as u32, t.trim_end_matches('\r').to_string()))
                .collect(),
        )
    }

    /// Accepts `{"token": id}` (the usual tokenizer vocab file) or
    /// `{"id": "token"}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
        let mut out = HashMap::new();
        for (k, v) in map {
            let (id, token) = match v {
                serde_json::Value::Number(n) => (n.as_u64(), k),
                serde_json::Value::String(s) => (k.parse::<u64>().ok(), s),
                _ => (None, k),
            };
            let id = id
                .and_then(|i| u32::try_from(i).ok())
                .ok_or_else(|| Error::Format(format!("bad vocabulary entry for `{token}`")))?;
            out.insert(id, token);
        }
        Ok(Self(out))
    }

    /// `.json` files are parsed as JSON, anything else as one token per line.
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Ok(Self::from_lines(&text))
        }
    }
}

impl FromIterator<(u32, String)> for Vocabulary {
    fn from_iter<I: IntoIterator<Item = (u32, String)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub token_id: u32,
    pub token: String,
    pub q_weight: f32,
    pub c_weight: f32,
    pub contribution: f64,
    pub expansion_in_query: bool,
    pub expansion_in_candidate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchTotals {
    pub lexical_score: f64,
    pub dense_score: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub query_id: String,
    pub candidate_id: String,
    pub alpha: f64,
    /// Sorted by descending contribution, ties by ascending token id.
    pub records: Vec<MatchRecord>,
    pub totals: MatchTotals,
}

pub fn match_report(
    query: &HybridEntry,
    candidate: &HybridEntry,
    vocab: &Vocabulary,
    alpha: f64,
) -> Result<MatchReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let surface = |e: &HybridEntry| -> Result<HashSet<String>> {
        e.surface_tokens
            .as_ref()
            .map(|ts| ts.iter().map(|t| t.to_lowercase()).collect())
            .ok_or_else(|| Error::Invalid(format!("entry `{}` carries no surface tokens", e.id)))
    };
    let q_surface = surface(query)?;
    let c_surface = surface(candidate)?;

    let mut records = Vec::new();
    for &(id, qw) in query.sparse.entries() {
        let Some(cw) = candidate.sparse.get(id) else { continue };
        let token = vocab.get(id).ok_or(Error::MissingVocab(id))?;
        let key = token.to_lowercase();
        records.push(MatchRecord {
            token_id: id,
            token: token.to_string(),
            q_weight: qw,
            c_weight: cw,
            contribution: f64::from(qw) * f64::from(cw),
            expansion_in_query: !q_surface.contains(&key),
            expansion_in_candidate: !c_surface.contains(&key),
        });
    }
    let lexical_score = dot_sparse(&query.sparse, &candidate.sparse);
    let dense_score = dot_dense(&query.dense, &candidate.dense)?;
    records.sort_by(|a, b| {
        b.contribution
            .total_cmp(&a.contribution)
            .then(a.token_id.cmp(&b.token_id))
    });
    Ok(MatchReport {
        query_id: query.id.clone(),
        candidate_id: candidate.id.clone(),
        alpha,
        records,
        totals: MatchTotals {
            lexical_score,
            dense_score,
            combined: interpolate(alpha, dense_score, lexical_score),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderFormat {
    #[default]
    Text,
    Json,
    Html,
}

impl FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(RenderFormat::Text),
            "json" => Ok(RenderFormat::Json),
            "html" => Ok(RenderFormat::Html),
            other => Err(Error::Config(format!("unknown render format `{other}`"))),
        }
    }
}

pub const INTENSITY_LEVELS: u8 = 5;

/// Contribution relative to the strongest record, bucketed into
/// `1..=INTENSITY_LEVELS`.
pub fn intensity(contribution: f64, max_contribution: f64) -> u8 {
    if max_contribution <= 0.0 || contribution <= 0.0 {
        return 0;
    }
    let level = (contribution / max_contribution * f64::from(INTENSITY_LEVELS)).ceil();
    level.clamp(1.0, f64::from(INTENSITY_LEVELS)) as u8
}

const NO_OVERLAP: &str = "no lexical overlap";

pub fn render(report: &MatchReport, format: RenderFormat) -> Result<String> {
    Ok(match format {
        RenderFormat::Json => serde_json::to_string_pretty(report)? + "\n",
        RenderFormat::Text => render_text(report),
        RenderFormat::Html => render_html(report),
    })
}

fn max_contribution(report: &MatchReport) -> f64 {
    report.records.first().map_or(0.0, |r| r.contribution)
}

fn expansion_label(r: &MatchRecord) -> &'static str {
    match (r.expansion_in_query, r.expansion_in_candidate) {
        (false, false) => "",
        (true, false) => "  expansion: query",
        (false, true) => "  expansion: candidate",
        (true, true) => "  expansion: query, candidate",
    }
}

fn render_text(report: &MatchReport) -> String {
    let mut out = String::new();
    let t = &report.totals;
    let _ = writeln!(
        out,
        "query {} vs candidate {} (alpha {:.2})",
        report.query_id, report.candidate_id, report.alpha
    );
    let _ = writeln!(
        out,
        "lexical {:.6}  dense {:.6}  combined {:.6}",
        t.lexical_score, t.dense_score, t.combined
    );
    if report.records.is_empty() {
        let _ = writeln!(out, "{NO_OVERLAP}");
        return out;
    }
    let max = max_contribution(report);
    for r in &report.records {
        let level = intensity(r.contribution, max) as usize;
        let bar = "#".repeat(level) + &".".repeat(INTENSITY_LEVELS as usize - level);
        let _ = writeln!(
            out,
            "  [{bar}] {}  {:.6}  (query {:.6} x candidate {:.6}){}",
            r.token,
            r.contribution,
            r.q_weight,
            r.c_weight,
            expansion_label(r)
        );
    }
    out
}

fn escape_html(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn render_html(report: &MatchReport) -> String {
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">");
    let _ = write!(
        out,
        "<title>{} / {}</title></head>\n<body style=\"font-family:sans-serif;margin:2em\">\n",
        escape_html(&report.query_id),
        escape_html(&report.candidate_id)
    );
    let t = &report.totals;
    let _ = writeln!(
        out,
        "<h2 style=\"font-size:1.1em\">query {} vs candidate {}</h2>\n<p>lexical {:.6} &middot; dense {:.6} &middot; combined {:.6} (alpha {:.2})</p>",
        escape_html(&report.query_id),
        escape_html(&report.candidate_id),
        t.lexical_score,
        t.dense_score,
        t.combined,
        report.alpha
    );
    if report.records.is_empty() {
        let _ = writeln!(out, "<p>{NO_OVERLAP}</p>");
    } else {
        let max = max_contribution(report);
        out.push_str("<p>");
        for r in &report.records {
            let opacity = f64::from(intensity(r.contribution, max)) / f64::from(INTENSITY_LEVELS);
            let _ = write!(
                out,
                "<span style=\"background:rgba(220,38,38,{opacity:.2});padding:0.1em 0.3em;margin:0 0.2em;border-radius:3px\" title=\"{:.6}\">{}</span>",
                r.contribution,
                escape_html(&r.token)
            );
        }
        out.push_str("</p>\n<table style=\"border-collapse:collapse\">\n<tr><th style=\"text-align:left;padding:0 1em\">token</th><th style=\"padding:0 1em\">query</th><th style=\"padding:0 1em\">candidate</th><th style=\"padding:0 1em\">contribution</th><th style=\"padding:0 1em\">expansion</th></tr>\n");
        for r in &report.records {
            let _ = writeln!(
                out,
                "<tr><td style=\"padding:0 1em\">{}</td><td style=\"padding:0 1em\">{:.6}</td><td style=\"padding:0 1em\">{:.6}</td><td style=\"padding:0 1em\">{:.6}</td><td style=\"padding:0 1em\">{}</td></tr>",
                escape_html(&r.token),
                r.q_weight,
                r.c_weight,
                r.contribution,
                expansion_label(r).trim_start_matches("  expansion: ")
            );
        }
        out.push_str("</table>\n");
    }
    out.push_str("</body></html>\n");
    out
}
