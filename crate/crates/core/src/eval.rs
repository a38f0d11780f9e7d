//! Ranking-quality metrics and paired significance tests.
//!
//! All metrics use binary relevance and are macro-averaged over queries that
//! have at least one relevant candidate:
//!
//! | metric   | per query                                              |
//! |----------|--------------------------------------------------------|
//! | MAP      | mean of precision@i over relevant positions i          |
//! | R-Prec   | relevant fraction of the top R (R = #relevant)         |
//! | MRR@5    | 1/rank of the first relevant hit if within top 5       |
//! | NDCG     | DCG / ideal DCG, gain 1, discount 1/log2(rank + 1)     |
//! | Hit@5    | 1 if any relevant hit is in the top 5                  |
//! | P@1      | 1 if the top candidate is relevant                     |

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scoring::{ScoredCandidate, SourcePriors, SourceTag};

/// Binary relevance judgments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    relevant: BTreeMap<String, BTreeSet<String>>,
}

impl Qrels {
    /// Records a judgment. Non-relevant judgments still register the query.
    pub fn judge(&mut self, qid: &str, candidate: &str, relevant: bool) {
        let set = self.relevant.entry(qid.to_string()).or_default();
        if relevant {
            set.insert(candidate.to_string());
        }
    }

    pub fn from_relevant<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut q = Self::default();
        for (qid, cand) in pairs {
            q.judge(qid, cand, true);
        }
        q
    }

    pub fn relevant(&self, qid: &str) -> Option<&BTreeSet<String>> {
        self.relevant.get(qid)
    }

    pub fn is_relevant(&self, qid: &str, candidate: &str) -> bool {
        self.relevant.get(qid).is_some_and(|s| s.contains(candidate))
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.relevant.keys().map(String::as_str)
    }
}

/// Ranked candidates per query, best first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedRun {
    queries: BTreeMap<String, Vec<(String, f64)>>,
}

impl RankedRun {
    /// Appends a candidate at the next rank of `qid`.
    pub fn push(&mut self, qid: &str, candidate: String, score: f64) -> Result<()> {
        let list = self.queries.entry(qid.to_string()).or_default();
        if list.iter().any(|(c, _)| *c == candidate) {
            return Err(Error::Invalid(format!(
                "candidate `{candidate}` appears twice for query `{qid}`"
            )));
        }
        list.push((candidate, score));
        Ok(())
    }

    pub fn insert_ranked(&mut self, qid: &str, ranked: &[ScoredCandidate]) -> Result<()> {
        for s in ranked {
            self.push(qid, s.candidate_id.clone(), s.combined)?;
        }
        Ok(())
    }

    pub fn get(&self, qid: &str) -> Option<&[(String, f64)]> {
        self.queries.get(qid).map(Vec::as_slice)
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &[(String, f64)])> {
        self.queries.iter().map(|(q, l)| (q.as_str(), l.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub map: f64,
    pub r_prec: f64,
    pub mrr_5: f64,
    pub ndcg: f64,
    pub hit_5: f64,
    pub p_1: f64,
}

/// Names of the six metrics, in [`Metrics::values`] order.
pub const METRIC_NAMES: [&str; 6] = ["map", "r_prec", "mrr_5", "ndcg", "hit_5", "p_1"];

impl Metrics {
    pub fn values(&self) -> [f64; 6] {
        [self.map, self.r_prec, self.mrr_5, self.ndcg, self.hit_5, self.p_1]
    }

    fn from_values(v: [f64; 6]) -> Self {
        Metrics {
            map: v[0],
            r_prec: v[1],
            mrr_5: v[2],
            ndcg: v[3],
            hit_5: v[4],
            p_1: v[5],
        }
    }

    fn mean<'a>(items: impl ExactSizeIterator<Item = &'a Metrics>) -> Self {
        let n = items.len() as f64;
        let mut acc = [0f64; 6];
        for m in items {
            for (a, v) in acc.iter_mut().zip(m.values()) {
                *a += v;
            }
        }
        Metrics::from_values(acc.map(|a| if n > 0.0 { a / n } else { 0.0 }))
    }
}

/// All six metrics for one ranked list. `relevant` must be nonempty.
pub fn query_metrics<'a>(ranking: impl IntoIterator<Item = &'a str>, relevant: &BTreeSet<String>) -> Metrics {
    let r = relevant.len();
    debug_assert!(r > 0);
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    let mut first_hit = None;
    let mut dcg = 0.0;
    let mut hits_at_r = 0usize;
    for (i, cand) in ranking.into_iter().enumerate() {
        let rank = i + 1;
        if relevant.contains(cand) {
            hits += 1;
            precision_sum += hits as f64 / rank as f64;
            first_hit.get_or_insert(rank);
            dcg += 1.0 / ((rank + 1) as f64).log2();
            if rank <= r {
                hits_at_r += 1;
            }
        }
    }
    let ideal: f64 = (1..=r).map(|rank| 1.0 / ((rank + 1) as f64).log2()).sum();
    let in_top5 = first_hit.is_some_and(|f| f <= 5);
    Metrics {
        map: precision_sum / r as f64,
        r_prec: hits_at_r as f64 / r as f64,
        mrr_5: match first_hit {
            Some(f) if f <= 5 => 1.0 / f as f64,
            _ => 0.0,
        },
        ndcg: dcg / ideal,
        hit_5: if in_top5 { 1.0 } else { 0.0 },
        p_1: if first_hit == Some(1) { 1.0 } else { 0.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceReport {
    pub evaluated: usize,
    pub aggregate: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSignificance {
    pub metric: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub fisher_p: f64,
    pub t_statistic: f64,
    pub t_p: f64,
    pub t_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub queries: usize,
    pub iterations: usize,
    pub seed: u64,
    pub metrics: Vec<MetricSignificance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub evaluated: usize,
    pub aggregate: Metrics,
    pub per_query: BTreeMap<String, Metrics>,
    /// Queries in the run that the qrels do not mention.
    pub missing_qrels: Vec<String>,
    /// Judged queries without any relevant candidate.
    pub no_relevant: Vec<String>,
    /// Judged queries (with relevant candidates) absent from the run.
    pub missing_run: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_source: Option<BTreeMap<SourceTag, SourceReport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub significance: Option<SignificanceReport>,
}

/// Evaluates every query present in both the run and the qrels that has at
/// least one relevant candidate.
pub fn evaluate(run: &RankedRun, qrels: &Qrels) -> Result<MetricReport> {
    let mut per_query = BTreeMap::new();
    let mut missing_qrels = Vec::new();
    let mut no_relevant = Vec::new();
    for (qid, list) in run.queries() {
        match qrels.relevant(qid) {
            None => missing_qrels.push(qid.to_string()),
            Some(rel) if rel.is_empty() => no_relevant.push(qid.to_string()),
            Some(rel) => {
                per_query.insert(
                    qid.to_string(),
                    query_metrics(list.iter().map(|(c, _)| c.as_str()), rel),
                );
            }
        }
    }
    let missing_run = qrels
        .relevant
        .iter()
        .filter(|(q, rel)| !rel.is_empty() && run.get(q).is_none())
        .map(|(q, _)| q.clone())
        .collect();
    if per_query.is_empty() {
        return Err(Error::EmptyEvaluation(
            "no query appears in both run and qrels with a relevant candidate".into(),
        ));
    }
    Ok(MetricReport {
        evaluated: per_query.len(),
        aggregate: Metrics::mean(per_query.values()),
        per_query,
        missing_qrels,
        no_relevant,
        missing_run,
        per_source: None,
        significance: None,
    })
}

/// Metrics restricted to each source in turn: each query's ranking keeps only
/// candidates of that source, and only that source's relevant candidates
/// count. Candidates missing from `sources` are treated as
/// [`SourceTag::Other`]. Sources with no evaluable query are omitted.
pub fn evaluate_by_source(
    run: &RankedRun,
    qrels: &Qrels,
    sources: &HashMap<String, SourceTag>,
) -> BTreeMap<SourceTag, SourceReport> {
    let source_of = |c: &str| sources.get(c).copied().unwrap_or(SourceTag::Other);
    let mut out = BTreeMap::new();
    for tag in SourceTag::ALL {
        let mut per_query = Vec::new();
        for (qid, list) in run.queries() {
            let Some(rel) = qrels.relevant(qid) else { continue };
            let rel: BTreeSet<String> = rel.iter().filter(|c| source_of(c) == tag).cloned().collect();
            if rel.is_empty() {
                continue;
            }
            let ranking = list
                .iter()
                .map(|(c, _)| c.as_str())
                .filter(|c| source_of(c) == tag);
            per_query.push(query_metrics(ranking, &rel));
        }
        if !per_query.is_empty() {
            out.insert(
                tag,
                SourceReport {
                    evaluated: per_query.len(),
                    aggregate: Metrics::mean(per_query.iter()),
                },
            );
        }
    }
    out
}

/// Per-source Hit@5 used as prior confidence. Every source in `all_sources`
/// receives at least `floor`, including sources with no evaluable query.
pub fn hit_rate_priors(
    breakdown: &BTreeMap<SourceTag, SourceReport>,
    all_sources: impl IntoIterator<Item = SourceTag>,
    floor: f64,
) -> SourcePriors {
    let mut priors: SourcePriors = breakdown
        .iter()
        .map(|(tag, r)| (*tag, r.aggregate.hit_5.max(floor)))
        .collect();
    for tag in all_sources {
        priors.entry(tag).or_insert(floor);
    }
    priors
}

pub const DEFAULT_ITERATIONS: usize = 10_000;

fn paired_diffs(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "paired samples".into(),
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Invalid("paired tests need at least two queries".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

/// Two-sided Fisher randomization test on paired per-query values.
///
/// Each iteration flips the sign of every difference with probability 1/2;
/// the p-value is `(c + 1) / (iterations + 1)` where `c` counts iterations
/// whose absolute mean difference reaches the observed one.
pub fn fisher_randomization(a: &[f64], b: &[f64], iterations: usize, seed: u64) -> Result<f64> {
    let diffs = paired_diffs(a, b)?;
    if iterations < 1000 {
        return Err(Error::Config(format!(
            "randomization test needs at least 1000 iterations, got {iterations}"
        )));
    }
    let observed = diffs.iter().sum::<f64>().abs();
    // Slack for summation-order rounding between the observed and permuted sums.
    let slack = 1e-9 * diffs.iter().map(|d| d.abs()).sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0usize;
    for _ in 0..iterations {
        let mut sum = 0.0;
        for chunk in diffs.chunks(64) {
            let bits: u64 = rng.random();
            for (i, d) in chunk.iter().enumerate() {
                if bits >> i & 1 == 1 {
                    sum -= d;
                } else {
                    sum += d;
                }
            }
        }
        if sum.abs() >= observed - slack {
            count += 1;
        }
    }
    Ok((count + 1) as f64 / (iterations + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t_statistic: f64,
    pub p_value: f64,
    /// Differences had zero variance; `p_value` is 1 for a zero mean
    /// difference and 0 otherwise.
    pub degenerate: bool,
}

/// Two-sided paired Student's t-test with `n - 1` degrees of freedom.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    let diffs = paired_diffs(a, b)?;
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let scale = diffs.iter().fold(0f64, |m, d| m.max(d.abs()));
    if var.sqrt() <= 1e-12 * scale {
        let zero = mean.abs() <= 1e-12 * scale;
        return Ok(TTest {
            t_statistic: if zero { 0.0 } else { mean.signum() * f64::INFINITY },
            p_value: if zero { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    let t = mean / (var.sqrt() / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::Invalid(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest {
        t_statistic: t,
        p_value: p,
        degenerate: false,
    })
}

/// Runs both significance tests on every metric over the queries evaluated
/// in both reports.
pub fn compare(
    a: &MetricReport,
    b: &MetricReport,
    iterations: usize,
    seed: u64,
) -> Result<SignificanceReport> {
    let common: Vec<&String> = a
        .per_query
        .keys()
        .filter(|q| b.per_query.contains_key(*q))
        .collect();
    let mut metrics = Vec::new();
    for (mi, name) in METRIC_NAMES.iter().enumerate() {
        let va: Vec<f64> = common.iter().map(|q| a.per_query[*q].values()[mi]).collect();
        let vb: Vec<f64> = common.iter().map(|q| b.per_query[*q].values()[mi]).collect();
        let t = paired_t_test(&va, &vb)?;
        metrics.push(MetricSignificance {
            metric: name.to_string(),
            mean_a: va.iter().sum::<f64>() / va.len() as f64,
            mean_b: vb.iter().sum::<f64>() / vb.len() as f64,
            fisher_p: fisher_randomization(&va, &vb, iterations, seed)?,
            t_statistic: t.t_statistic,
            t_p: t.p_value,
            t_degenerate: t.degenerate,
        });
    }
    Ok(SignificanceReport {
        queries: common.len(),
        iterations,
        seed,
        metrics,
    })
}

/// CSV with one row per evaluated query followed by an `all` row.
pub fn report_csv(report: &MetricReport) -> String {
    let mut out = format!("query,{}\n", METRIC_NAMES.join(","));
    let row = |name: &str, m: &Metrics| {
        let vals: Vec<String> = m.values().iter().map(|v| format!("{v:.6}")).collect();
        format!("{name},{}\n", vals.join(","))
    };
    for (q, m) in &report.per_query {
        out.push_str(&row(q, m));
    }
    out.push_str(&row("all", &report.aggregate));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_single_hit() {
        let m = query_metrics(["a", "b", "c", "d", "e"], &rel(&["a"]));
        assert_eq!(m.values(), [1.0; 6]);
    }

    #[test]
    fn third_of_five() {
        let m = query_metrics(["a", "b", "c", "d", "e"], &rel(&["c"]));
        assert!((m.mrr_5 - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.map - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.ndcg - 0.5).abs() < 1e-12);
        assert_eq!((m.hit_5, m.p_1, m.r_prec), (1.0, 0.0, 0.0));
    }

    #[test]
    fn first_and_fourth_of_six() {
        let m = query_metrics(["a", "b", "c", "d", "e", "f"], &rel(&["a", "d"]));
        assert!((m.map - 0.75).abs() < 1e-12);
        assert!((m.r_prec - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hit_beyond_five() {
        let m = query_metrics(["a", "b", "c", "d", "e", "f"], &rel(&["f"]));
        assert_eq!((m.mrr_5, m.hit_5), (0.0, 0.0));
        assert!(m.ndcg > 0.0);
    }

    #[test]
    fn evaluate_bookkeeping() {
        let mut run = RankedRun::default();
        run.push("q1", "a".into(), 2.0).unwrap();
        run.push("q1", "b".into(), 1.0).unwrap();
        run.push("q2", "c".into(), 1.0).unwrap();
        run.push("q3", "d".into(), 1.0).unwrap();
        assert!(run.push("q1", "a".into(), 0.5).is_err());
        let mut qrels = Qrels::from_relevant([("q1", "b"), ("q4", "x")]);
        qrels.judge("q2", "c", false);
        let r = evaluate(&run, &qrels).unwrap();
        assert_eq!(r.evaluated, 1);
        assert_eq!(r.missing_qrels, vec!["q3"]);
        assert_eq!(r.no_relevant, vec!["q2"]);
        assert_eq!(r.missing_run, vec!["q4"]);
        assert_eq!(r.aggregate.mrr_5, 0.5);
        assert!(matches!(
            evaluate(&RankedRun::default(), &qrels),
            Err(Error::EmptyEvaluation(_))
        ));
    }

    #[test]
    fn fisher_identical_is_one() {
        let a = [0.1, 0.5, 0.9, 0.3];
        assert_eq!(fisher_randomization(&a, &a, 1000, 7).unwrap(), 1.0);
    }

    #[test]
    fn fisher_validation() {
        assert!(fisher_randomization(&[1.0, 2.0], &[1.0], 1000, 0).is_err());
        assert!(fisher_randomization(&[1.0], &[1.0], 1000, 0).is_err());
        assert!(fisher_randomization(&[1.0, 2.0], &[1.0, 0.0], 999, 0).is_err());
    }

    #[test]
    fn fisher_is_seeded() {
        let a = [0.2, 0.4, 0.9, 0.1, 0.5, 0.3];
        let b = [0.1, 0.5, 0.6, 0.1, 0.2, 0.35];
        let p1 = fisher_randomization(&a, &b, 2000, 42).unwrap();
        let p2 = fisher_randomization(&a, &b, 2000, 42).unwrap();
        assert_eq!(p1.to_bits(), p2.to_bits());
        assert!(p1 > 0.0 && p1 <= 1.0);
    }

    #[test]
    fn t_test_hand_value() {
        let t = paired_t_test(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!((t.t_statistic - 12f64.sqrt()).abs() < 1e-9);
        assert!(!t.degenerate);
    }

    #[test]
    fn t_test_degenerate() {
        let t = paired_t_test(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.p_value, 1.0);
        let t = paired_t_test(&[1.5, 2.5], &[0.5, 1.5]).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.p_value, 0.0);
    }

    #[test]
    fn priors_fill_floor() {
        let mut breakdown = BTreeMap::new();
        breakdown.insert(
            SourceTag::Review,
            SourceReport {
                evaluated: 2,
                aggregate: Metrics {
                    hit_5: 0.5,
                    ..Default::default()
                },
            },
        );
        breakdown.insert(
            SourceTag::Cqa,
            SourceReport {
                evaluated: 1,
                aggregate: Metrics::default(),
            },
        );
        let p = hit_rate_priors(&breakdown, [SourceTag::Bullet], 0.01);
        assert_eq!(p[&SourceTag::Review], 0.5);
        assert_eq!(p[&SourceTag::Cqa], 0.01);
        assert_eq!(p[&SourceTag::Bullet], 0.01);
    }

    #[test]
    fn per_source_restricts_both_sides() {
        let mut run = RankedRun::default();
        for (c, s) in [("r1", 3.0), ("c1", 2.0), ("r2", 1.0)] {
            run.push("q", c.into(), s).unwrap();
        }
        let qrels = Qrels::from_relevant([("q", "r2"), ("q", "c1")]);
        let sources: HashMap<String, SourceTag> = [
            ("r1", SourceTag::Review),
            ("r2", SourceTag::Review),
            ("c1", SourceTag::Cqa),
        ]
        .into_iter()
        .map(|(c, s)| (c.to_string(), s))
        .collect();
        let by = evaluate_by_source(&run, &qrels, &sources);
        assert_eq!(by.len(), 2);
        assert_eq!(by[&SourceTag::Review].aggregate.mrr_5, 0.5);
        assert_eq!(by[&SourceTag::Cqa].aggregate.p_1, 1.0);
    }
}
