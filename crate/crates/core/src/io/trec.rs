use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{Qrels, RankedRun};
use crate::scoring::ScoredCandidate;

/// `qid Q0 candidate_id rank score run_tag`, score with six decimals.
pub fn format_run_line(qid: &str, candidate_id: &str, rank: usize, score: f64, tag: &str) -> String {
    format!("{qid} Q0 {candidate_id} {rank} {score:.6} {tag}")
}

/// Appends the run lines for one query (ranks start at 1).
pub fn write_run(out: &mut String, qid: &str, ranked: &[ScoredCandidate], tag: &str) {
    for (i, s) in ranked.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}",
            format_run_line(qid, &s.candidate_id, i + 1, s.combined, tag)
        );
    }
}

/// Parses a TREC run. Lines are ordered per query by their rank column.
pub fn parse_run(text: &str) -> Result<RankedRun> {
    let mut rows: Vec<(String, usize, String, f64)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(Error::Format(format!(
                "run line {}: expected 6 fields, found {}",
                n + 1,
                fields.len()
            )));
        }
        let rank = fields[3]
            .parse::<usize>()
            .map_err(|_| Error::Format(format!("run line {}: bad rank `{}`", n + 1, fields[3])))?;
        let score = fields[4]
            .parse::<f64>()
            .ok()
            .filter(|s| s.is_finite())
            .ok_or_else(|| Error::Format(format!("run line {}: bad score `{}`", n + 1, fields[4])))?;
        rows.push((fields[0].to_string(), rank, fields[2].to_string(), score));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut run = RankedRun::default();
    for (qid, _, cand, score) in rows {
        run.push(&qid, cand, score)?;
    }
    Ok(run)
}

/// Parses `qid 0 docid rel`. Any positive `rel` counts as relevant; queries
/// whose lines are all non-relevant are kept with an empty relevant set.
pub fn parse_qrels(text: &str) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::Format(format!(
                "qrels line {}: expected 4 fields, found {}",
                n + 1,
                fields.len()
            )));
        }
        let rel = fields[3].parse::<i64>().map_err(|_| {
            Error::Format(format!("qrels line {}: bad relevance `{}`", n + 1, fields[3]))
        })?;
        qrels.judge(fields[0], fields[2], rel > 0);
    }
    Ok(qrels)
}

pub fn read_run(path: &Path) -> Result<RankedRun> {
    parse_run(&super::read_to_string(path)?)
}

pub fn read_qrels(path: &Path) -> Result<Qrels> {
    parse_qrels(&super::read_to_string(path)?)
}
