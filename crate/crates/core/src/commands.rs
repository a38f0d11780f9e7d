//! File-to-file pipelines behind the `hybridrank` binary.
//!
//! Each command reads its inputs, validates everything before writing, then
//! writes its output atomically together with a `<output>.manifest.json`
//! describing the resolved configuration and input digests.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bm25::{bm25_rank, Bm25Corpus, Bm25Params, Document, NormalizationRules};
use crate::error::{Error, Result};
use crate::eval::{
    compare, evaluate, evaluate_by_source, hit_rate_priors, report_csv, MetricReport, Metrics,
    RankedRun, METRIC_NAMES,
};
use crate::explain::{match_report, render, RenderFormat, Vocabulary};
use crate::index::{BuildOptions, HybridEntry, HybridIndex};
use crate::io::{
    atomic_write, read_dense_file, read_entries, read_hlgt_file, read_jsonl, read_manifest,
    read_qrels, read_run, read_text_records, read_training_instances, sha256_file, write_entries,
    write_run,
};
use crate::losses::{batch_loss, instance_loss, LossConfig};
use crate::repr::{encode, EncodeConfig};
use crate::resources::{cost_table, cost_table_csv, measure_latency};
use crate::scoring::{ScoringConfig, SourcePriors, SourceTag};

/// Provenance record written next to every command output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Value,
    /// Input path to hex SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Seconds since the Unix epoch; the only field expected to differ
    /// between identical reruns.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: Value, inputs: &[&Path], seed: Option<u64>) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            subcommand: subcommand.to_string(),
            config,
            inputs,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        })
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_for(&self, output: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        atomic_write(&Self::path_for(output), &bytes)
    }
}

#[derive(Debug, Clone)]
pub struct EncodeOptions {
    pub logits: PathBuf,
    pub manifest: PathBuf,
    pub dense: PathBuf,
    pub config: EncodeConfig,
    pub output: PathBuf,
}

/// Turns logit matrices plus dense vectors into representation JSONL.
/// Returns the number of entries written.
pub fn run_encode(opts: &EncodeOptions) -> Result<usize> {
    let matrices = read_hlgt_file(&opts.logits)?;
    let manifest = read_manifest(&opts.manifest)?;
    let dense = read_dense_file(&opts.dense)?;
    if matrices.len() != manifest.items.len() || matrices.len() != dense.len() {
        return Err(Error::Invalid(format!(
            "count mismatch: {} logit matrices, {} manifest items, {} dense vectors",
            matrices.len(),
            manifest.items.len(),
            dense.len()
        )));
    }
    let entries: Vec<HybridEntry> = matrices
        .par_iter()
        .zip(manifest.items.par_iter())
        .zip(dense.into_par_iter())
        .map(|((m, item), d)| {
            let sparse = encode(m, &opts.config)
                .map_err(|e| Error::Invalid(format!("item `{}`: {e}", item.id)))?;
            Ok(HybridEntry {
                id: item.id.clone(),
                source: SourceTag::parse_lenient(&item.source),
                dense: d,
                sparse,
                surface_tokens: Some(item.surface_tokens.clone()),
            })
        })
        .collect::<Result<_>>()?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = entries.iter().find(|e| !seen.insert(e.id.as_str())) {
        return Err(Error::DuplicateId(dup.id.clone()));
    }
    write_entries(&opts.output, &entries)?;
    RunManifest::new(
        "encode",
        json!({ "k": opts.config.k, "aggregation": opts.config.aggregation }),
        &[&opts.logits, &opts.manifest, &opts.dense],
        None,
    )?
    .write_for(&opts.output)?;
    Ok(entries.len())
}

#[derive(Debug, Clone)]
pub struct IndexOptions {
    pub reps: PathBuf,
    pub vocab_size: Option<usize>,
    pub output: PathBuf,
}

pub fn run_index(opts: &IndexOptions) -> Result<HybridIndex> {
    let entries = read_entries(&opts.reps)?;
    let config = json!({ "vocab_size": opts.vocab_size, "source": opts.reps.display().to_string() });
    let index = HybridIndex::build_with(
        entries,
        BuildOptions {
            vocab_size: opts.vocab_size,
            config: config.clone(),
        },
    )?;
    index.save(&opts.output)?;
    RunManifest::new("index", config, &[&opts.reps], None)?.write_for(&opts.output)?;
    Ok(index)
}

/// Reads `{"<source>": prior, ...}`.
pub fn read_priors(path: &Path) -> Result<SourcePriors> {
    let raw: BTreeMap<String, f64> = serde_json::from_str(&crate::io::read_to_string(path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut priors = SourcePriors::new();
    for (label, p) in raw {
        let tag = SourceTag::parse_lenient(&label);
        if priors.insert(tag, p).is_some() {
            return Err(Error::Config(format!("prior for source `{tag}` given twice")));
        }
    }
    Ok(priors)
}

#[derive(Debug, Clone)]
pub struct RankOptions {
    pub index: PathBuf,
    pub queries: PathBuf,
    pub alpha: f64,
    pub top_n: usize,
    pub source_priors: Option<PathBuf>,
    pub sources: Option<Vec<SourceTag>>,
    pub trec_tag: String,
    pub output: PathBuf,
}

/// Ranks every query against the index and writes a TREC run.
pub fn run_rank(opts: &RankOptions) -> Result<RankedRun> {
    let index = HybridIndex::load(&opts.index)?;
    let queries = read_entries(&opts.queries)?;
    let mut cfg = ScoringConfig::new(opts.alpha)?;
    let mut inputs: Vec<&Path> = vec![&opts.index, &opts.queries];
    if let Some(p) = &opts.source_priors {
        cfg = cfg.with_priors(read_priors(p)?)?;
        inputs.push(p);
    }
    let ranked = rank_queries(&index, &queries, &cfg, opts.top_n, opts.sources.as_deref())?;
    let mut text = String::new();
    let mut run = RankedRun::default();
    for (q, list) in queries.iter().zip(&ranked) {
        write_run(&mut text, &q.id, list, &opts.trec_tag);
        run.insert_ranked(&q.id, list)?;
    }
    atomic_write(&opts.output, text.as_bytes())?;
    RunManifest::new(
        "rank",
        json!({
            "alpha": cfg.alpha,
            "top_n": opts.top_n,
            "normalization": cfg.normalization,
            "source_priors": cfg.source_priors,
            "sources": opts.sources,
            "trec_tag": opts.trec_tag,
        }),
        &inputs,
        None,
    )?
    .write_for(&opts.output)?;
    Ok(run)
}

fn rank_queries(
    index: &HybridIndex,
    queries: &[HybridEntry],
    cfg: &ScoringConfig,
    top_n: usize,
    sources: Option<&[SourceTag]>,
) -> Result<Vec<Vec<crate::scoring::ScoredCandidate>>> {
    let mut seen = BTreeSet::new();
    if let Some(dup) = queries.iter().find(|q| !seen.insert(q.id.as_str())) {
        return Err(Error::DuplicateId(dup.id.clone()));
    }
    queries
        .par_iter()
        .map(|q| index.query_filtered(q, cfg, top_n, sources))
        .collect()
}

fn ranked_run(queries: &[HybridEntry], ranked: &[Vec<crate::scoring::ScoredCandidate>]) -> Result<RankedRun> {
    let mut run = RankedRun::default();
    for (q, list) in queries.iter().zip(ranked) {
        run.insert_ranked(&q.id, list)?;
    }
    Ok(run)
}

/// Parses `start:stop:step` (inclusive) or a comma list. Values are rounded
/// to 10 decimals, deduplicated and sorted.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let round = |v: f64| (v * 1e10).round() / 1e10;
    let bad = || Error::Config(format!("bad alpha grid `{spec}`"));
    let mut values: Vec<f64> = if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if parts.iter().any(|v| !v.is_finite()) || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let steps = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=steps).map(|i| round(start + i as f64 * step)).collect()
    } else {
        spec.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>().map(round).map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if values.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Config(format!("alpha {v} outside [0, 1]")));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    Ok(values)
}

#[derive(Debug, Clone)]
pub enum PriorSource {
    None,
    File(PathBuf),
    /// Per-source Hit@5 of the unscaled ranking at the same alpha and k.
    FromRawRanking,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub index: PathBuf,
    pub queries: PathBuf,
    pub qrels: PathBuf,
    pub grid: Vec<f64>,
    pub k_list: Vec<usize>,
    pub priors: PriorSource,
    pub top_n: usize,
    pub output: PathBuf,
}

/// Lower bound applied to derived priors so that no source is zeroed out.
pub const PRIOR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub k: usize,
    pub mode: &'static str,
    pub metrics: Metrics,
}

/// Evaluates every `(alpha, k)` grid point, unscaled and (when priors are
/// configured) source-scaled, and writes one CSV row per point and mode.
pub fn run_sweep(opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if opts.grid.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    let index = HybridIndex::load(&opts.index)?;
    let queries = read_entries(&opts.queries)?;
    let qrels = read_qrels(&opts.qrels)?;
    let mut inputs: Vec<&Path> = vec![&opts.index, &opts.queries, &opts.qrels];
    let file_priors = match &opts.priors {
        PriorSource::File(p) => {
            inputs.push(p);
            Some(read_priors(p)?)
        }
        _ => None,
    };

    let mut grid = opts.grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut ks: Vec<usize> = opts.k_list.clone();
    ks.sort_unstable();
    ks.dedup();
    if ks.contains(&0) {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let stored_k = index.meta().k;
    let (ks, skipped): (Vec<usize>, Vec<usize>) = ks.into_iter().partition(|&k| k <= stored_k.max(1));
    for k in &skipped {
        eprintln!("warning: k={k} exceeds the index sparsity ({stored_k}); skipped");
    }
    if ks.is_empty() {
        return Err(Error::Config(format!(
            "every requested k exceeds the index sparsity ({stored_k})"
        )));
    }
    let sources: HashMap<String, SourceTag> = index
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), index.source_of(i)))
        .collect();
    let present: BTreeSet<SourceTag> = sources.values().copied().collect();

    let mut rows = Vec::new();
    for &k in &ks {
        let (k_index, k_queries) = if k >= stored_k {
            (index.clone(), queries.clone())
        } else {
            let truncate = |e: &HybridEntry| -> Result<HybridEntry> {
                Ok(HybridEntry {
                    sparse: e.sparse.truncate_top(k)?,
                    ..e.clone()
                })
            };
            let entries = index.to_entries().iter().map(truncate).collect::<Result<Vec<_>>>()?;
            let idx = HybridIndex::build_with(
                entries,
                BuildOptions {
                    vocab_size: index.meta().vocab_size,
                    config: index.meta().config.clone(),
                },
            )?;
            (idx, queries.iter().map(truncate).collect::<Result<Vec<_>>>()?)
        };
        for &alpha in &grid {
            let cfg = ScoringConfig::new(alpha)?;
            let raw = ranked_run(&k_queries, &rank_queries(&k_index, &k_queries, &cfg, opts.top_n, None)?)?;
            rows.push(SweepRow {
                alpha,
                k,
                mode: "raw",
                metrics: evaluate(&raw, &qrels)?.aggregate,
            });
            let priors = match (&opts.priors, &file_priors) {
                (PriorSource::None, _) => continue,
                (PriorSource::File(_), Some(p)) => p.clone(),
                _ => hit_rate_priors(
                    &evaluate_by_source(&raw, &qrels, &sources),
                    present.iter().copied(),
                    PRIOR_FLOOR,
                ),
            };
            let scaled_cfg = cfg.with_priors(priors)?;
            let scaled = ranked_run(
                &k_queries,
                &rank_queries(&k_index, &k_queries, &scaled_cfg, opts.top_n, None)?,
            )?;
            rows.push(SweepRow {
                alpha,
                k,
                mode: "scaled",
                metrics: evaluate(&scaled, &qrels)?.aggregate,
            });
        }
    }

    let mut csv = format!("alpha,k,mode,{}\n", METRIC_NAMES.join(","));
    for r in &rows {
        let vals: Vec<String> = r.metrics.values().iter().map(|v| format!("{v:.6}")).collect();
        csv.push_str(&format!("{},{},{},{}\n", r.alpha, r.k, r.mode, vals.join(",")));
    }
    atomic_write(&opts.output, csv.as_bytes())?;
    let priors_mode = match &opts.priors {
        PriorSource::None => "none",
        PriorSource::File(_) => "file",
        PriorSource::FromRawRanking => "from_raw_ranking",
    };
    RunManifest::new(
        "sweep",
        json!({
            "grid": grid,
            "k_list": ks,
            "skipped_k": skipped,
            "priors": priors_mode,
            "prior_floor": PRIOR_FLOOR,
            "top_n": opts.top_n,
        }),
        &inputs,
        None,
    )?
    .write_for(&opts.output)?;
    Ok(rows)
}

/// Reads `id -> source` from any JSONL whose lines carry `id` and `source`.
pub fn read_source_map(path: &Path) -> Result<HashMap<String, SourceTag>> {
    let lines: Vec<Value> = read_jsonl(path)?;
    lines
        .iter()
        .map(|v| {
            let id = v
                .get("id")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Format(format!("{}: line without id", path.display())))?;
            let source = v.get("source").and_then(Value::as_str).unwrap_or("other");
            Ok((id.to_string(), SourceTag::parse_lenient(source)))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub run: PathBuf,
    pub qrels: PathBuf,
    pub baseline: Option<PathBuf>,
    pub sources: Option<PathBuf>,
    pub iterations: usize,
    pub seed: u64,
    pub csv: Option<PathBuf>,
    pub output: PathBuf,
}

pub fn run_eval(opts: &EvalOptions) -> Result<MetricReport> {
    let run = read_run(&opts.run)?;
    let qrels = read_qrels(&opts.qrels)?;
    let mut report = evaluate(&run, &qrels)?;
    let mut inputs: Vec<&Path> = vec![&opts.run, &opts.qrels];
    if let Some(p) = &opts.sources {
        report.per_source = Some(evaluate_by_source(&run, &qrels, &read_source_map(p)?));
        inputs.push(p);
    }
    if let Some(p) = &opts.baseline {
        let baseline = evaluate(&read_run(p)?, &qrels)?;
        report.significance = Some(compare(&report, &baseline, opts.iterations, opts.seed)?);
        inputs.push(p);
    }
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    atomic_write(&opts.output, &bytes)?;
    if let Some(csv) = &opts.csv {
        atomic_write(csv, report_csv(&report).as_bytes())?;
    }
    let seed = opts.baseline.as_ref().map(|_| opts.seed);
    RunManifest::new(
        "eval",
        json!({ "iterations": opts.iterations, "baseline": opts.baseline.is_some() }),
        &inputs,
        seed,
    )?
    .write_for(&opts.output)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub enum CandidateSource {
    Index(PathBuf),
    Reps(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ExplainOptions {
    pub queries: PathBuf,
    pub query_id: String,
    pub candidates: CandidateSource,
    pub candidate_id: String,
    pub vocab: PathBuf,
    pub alpha: f64,
    pub format: RenderFormat,
    pub output: Option<PathBuf>,
}

/// Renders the match report; writes it to `output` when given and returns
/// the rendered document.
pub fn run_explain(opts: &ExplainOptions) -> Result<String> {
    let query = read_entries(&opts.queries)?
        .into_iter()
        .find(|e| e.id == opts.query_id)
        .ok_or_else(|| Error::UnknownId(opts.query_id.clone()))?;
    let (candidate, cand_path) = match &opts.candidates {
        CandidateSource::Index(p) => (HybridIndex::load(p)?.entry(&opts.candidate_id), p),
        CandidateSource::Reps(p) => (
            read_entries(p)?.into_iter().find(|e| e.id == opts.candidate_id),
            p,
        ),
    };
    let candidate = candidate.ok_or_else(|| Error::UnknownId(opts.candidate_id.clone()))?;
    let vocab = Vocabulary::load(&opts.vocab)?;
    let report = match_report(&query, &candidate, &vocab, opts.alpha)?;
    let doc = render(&report, opts.format)?;
    if let Some(out) = &opts.output {
        atomic_write(out, doc.as_bytes())?;
        RunManifest::new(
            "explain",
            json!({
                "query_id": opts.query_id,
                "candidate_id": opts.candidate_id,
                "alpha": opts.alpha,
                "format": opts.format,
            }),
            &[&opts.queries, cand_path, &opts.vocab],
            None,
        )?
        .write_for(out)?;
    }
    Ok(doc)
}

#[derive(Debug, Clone)]
pub struct LatencyOptions {
    pub index: PathBuf,
    pub queries: PathBuf,
    pub alpha: f64,
    pub top_n: usize,
    pub repetitions: usize,
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(TableFormat::Json),
            "csv" => Ok(TableFormat::Csv),
            other => Err(Error::Config(format!("unknown table format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResourcesOptions {
    pub h: u64,
    pub n: u64,
    pub k: u64,
    pub format: TableFormat,
    pub latency: Option<LatencyOptions>,
    pub output: Option<PathBuf>,
}

pub fn run_resources(opts: &ResourcesOptions) -> Result<String> {
    let rows = cost_table(opts.h, opts.n, opts.k)?;
    let latency = match &opts.latency {
        Some(l) => {
            let index = HybridIndex::load(&l.index)?;
            let queries = read_entries(&l.queries)?;
            let cfg = ScoringConfig::new(l.alpha)?;
            Some(measure_latency(&index, &queries, &cfg, l.top_n, l.repetitions, l.parallel)?)
        }
        None => None,
    };
    let doc = match opts.format {
        TableFormat::Json => {
            let v = json!({
                "params": { "h": opts.h, "n": opts.n, "k": opts.k },
                "rows": rows,
                "latency": latency,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        TableFormat::Csv => {
            let mut s = cost_table_csv(&rows);
            if let Some(l) = &latency {
                s.push_str("\nmetric,value\n");
                s.push_str(&format!("candidates_per_query,{}\n", l.candidates_per_query));
                s.push_str(&format!("per_query_ms,{:.6}\n", l.per_query_ms));
                if let Some(pc) = l.per_candidate_ms {
                    s.push_str(&format!("per_candidate_ms,{pc:.9}\n"));
                }
            }
            s
        }
    };
    if let Some(out) = &opts.output {
        atomic_write(out, doc.as_bytes())?;
        let inputs: Vec<&Path> = match &opts.latency {
            Some(l) => vec![&l.index, &l.queries],
            None => vec![],
        };
        RunManifest::new(
            "resources",
            json!({ "h": opts.h, "n": opts.n, "k": opts.k }),
            &inputs,
            None,
        )?
        .write_for(out)?;
    }
    Ok(doc)
}

#[derive(Debug, Clone)]
pub struct Bm25Options {
    pub corpus: PathBuf,
    pub queries: PathBuf,
    pub params: Bm25Params,
    pub rules: NormalizationRules,
    pub top_n: usize,
    pub trec_tag: String,
    pub output: PathBuf,
}

pub fn run_bm25(opts: &Bm25Options) -> Result<RankedRun> {
    let docs: Vec<Document> = read_text_records(&opts.corpus)?
        .into_iter()
        .map(|r| Document {
            source: SourceTag::parse_lenient(&r.source),
            id: r.id,
            text: r.text,
        })
        .collect();
    let corpus = Bm25Corpus::build(&docs, &opts.rules)?;
    let queries = read_text_records(&opts.queries)?;
    let ranked = queries
        .par_iter()
        .map(|q| {
            let mut r = bm25_rank(&q.text, &corpus, opts.params)?;
            r.truncate(opts.top_n);
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut text = String::new();
    let mut run = RankedRun::default();
    for (q, list) in queries.iter().zip(&ranked) {
        write_run(&mut text, &q.id, list, &opts.trec_tag);
        run.insert_ranked(&q.id, list)?;
    }
    atomic_write(&opts.output, text.as_bytes())?;
    RunManifest::new(
        "bm25",
        json!({
            "k1": opts.params.k1,
            "b": opts.params.b,
            "rules": opts.rules,
            "top_n": opts.top_n,
            "trec_tag": opts.trec_tag,
        }),
        &[&opts.corpus, &opts.queries],
        None,
    )?
    .write_for(&opts.output)?;
    Ok(run)
}

#[derive(Debug, Clone)]
pub struct LossOptions {
    pub instances: PathBuf,
    pub config: LossConfig,
    pub output: PathBuf,
}

/// Per-instance and batch objective values for a JSONL batch.
pub fn run_loss(opts: &LossOptions) -> Result<Value> {
    opts.config.validate()?;
    let batch = read_training_instances(&opts.instances)?;
    let per = batch
        .iter()
        .map(|i| instance_loss(i, &opts.config))
        .collect::<Result<Vec<_>>>()?;
    let total = batch_loss(&batch, &opts.config)?;
    let doc = json!({ "config": opts.config, "instances": per, "batch": total });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    atomic_write(&opts.output, &bytes)?;
    RunManifest::new("loss", json!(opts.config), &[&opts.instances], None)?
        .write_for(&opts.output)?;
    Ok(doc)
}
