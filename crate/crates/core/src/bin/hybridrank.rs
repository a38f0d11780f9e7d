use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hybridrank::bm25::{Bm25Params, NormalizationRules};
use hybridrank::commands::{self, CandidateSource, PriorSource, TableFormat};
use hybridrank::eval::DEFAULT_ITERATIONS;
use hybridrank::explain::RenderFormat;
use hybridrank::losses::LossConfig;
use hybridrank::{Aggregation, EncodeConfig, Error, Result, SourceTag};

#[derive(Parser)]
#[command(name = "hybridrank", version, about = "Hybrid sparse-dense ranking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build representation JSONL from logits, a manifest and dense vectors.
    Encode {
        #[arg(long)]
        logits: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        dense: PathBuf,
        #[arg(long, default_value_t = 128)]
        k: usize,
        #[arg(long, default_value = "max")]
        aggregation: Aggregation,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build a binary index from representation JSONL.
    Index {
        #[arg(long)]
        reps: PathBuf,
        #[arg(long)]
        vocab_size: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Rank queries against an index and write a TREC run.
    Rank {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[command(flatten)]
        out: RunOut,
        /// JSON object mapping source label to prior.
        #[arg(long)]
        source_priors: Option<PathBuf>,
        /// Restrict candidates to these sources.
        #[arg(long, value_delimiter = ',')]
        sources: Option<Vec<SourceTag>>,
    },
    /// Score a TREC run against qrels.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        /// Second run to test against.
        #[arg(long)]
        baseline_run: Option<PathBuf>,
        /// JSONL with `id` and `source` per candidate, for a per-source breakdown.
        #[arg(long)]
        sources: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate a grid of alpha and k values.
    Sweep {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        /// `start:stop:step` or a comma list.
        #[arg(long, default_value = "0:1:0.1")]
        grid: String,
        #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
        k_list: Vec<usize>,
        /// Prior file for the scaled rows.
        #[arg(long, conflicts_with = "auto_priors")]
        source_priors: Option<PathBuf>,
        /// Derive priors from per-source Hit@5 of the unscaled ranking.
        #[arg(long)]
        auto_priors: bool,
        #[arg(long, default_value_t = 1000)]
        top_n: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Show which vocabulary terms drive a query-candidate lexical score.
    Explain {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        query_id: String,
        #[arg(long, required_unless_present = "candidates")]
        index: Option<PathBuf>,
        #[arg(long, conflicts_with = "index")]
        candidates: Option<PathBuf>,
        #[arg(long)]
        candidate_id: String,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value = "text")]
        format: RenderFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the cost model and optionally measure query latency.
    Resources {
        #[arg(long, default_value_t = 768)]
        h: u64,
        #[arg(long, default_value_t = 64)]
        n: u64,
        #[arg(long, default_value_t = 128)]
        k: u64,
        #[arg(long, default_value = "json")]
        format: TableFormat,
        #[arg(long, requires = "queries")]
        index: Option<PathBuf>,
        #[arg(long, requires = "index")]
        queries: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        #[arg(long)]
        parallel: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rank raw text with BM25.
    Bm25 {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        k1: f64,
        #[arg(long, default_value_t = 0.75)]
        b: f64,
        #[arg(long)]
        no_lowercase: bool,
        #[arg(long)]
        no_unit_expansion: bool,
        #[arg(long)]
        no_json_flatten: bool,
        #[arg(long)]
        no_transliteration: bool,
        #[command(flatten)]
        out: RunOut,
    },
    /// Compute training objective values for a JSONL batch.
    Loss {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 3e-4)]
        lambda_q: f64,
        #[arg(long, default_value_t = 1e-4)]
        lambda_c: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct RunOut {
    #[arg(long, default_value_t = 1000)]
    top_n: usize,
    #[arg(long, default_value = "hybridrank")]
    trec_tag: String,
    #[arg(short, long)]
    output: PathBuf,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("HYBRIDRANK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("HYBRIDRANK_THREADS=`{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Encode { logits, manifest, dense, k, aggregation, output } => {
            let n = commands::run_encode(&commands::EncodeOptions {
                logits,
                manifest,
                dense,
                config: EncodeConfig::new(k, aggregation)?,
                output,
            })?;
            eprintln!("encoded {n} items");
        }
        Command::Index { reps, vocab_size, output } => {
            let index = commands::run_index(&commands::IndexOptions { reps, vocab_size, output })?;
            eprintln!("indexed {} entries", index.len());
        }
        Command::Rank { index, queries, alpha, out, source_priors, sources } => {
            commands::run_rank(&commands::RankOptions {
                index,
                queries,
                alpha,
                top_n: out.top_n,
                source_priors,
                sources,
                trec_tag: out.trec_tag,
                output: out.output,
            })?;
        }
        Command::Eval { run, qrels, baseline_run, sources, iterations, seed, csv, output } => {
            let report = commands::run_eval(&commands::EvalOptions {
                run,
                qrels,
                baseline: baseline_run,
                sources,
                iterations,
                seed,
                csv,
                output,
            })?;
            eprintln!("evaluated {} queries", report.evaluated);
        }
        Command::Sweep {
            index,
            queries,
            qrels,
            grid,
            k_list,
            source_priors,
            auto_priors,
            top_n,
            output,
        } => {
            let priors = match (source_priors, auto_priors) {
                (Some(p), _) => PriorSource::File(p),
                (None, true) => PriorSource::FromRawRanking,
                (None, false) => PriorSource::None,
            };
            let rows = commands::run_sweep(&commands::SweepOptions {
                index,
                queries,
                qrels,
                grid: commands::parse_grid(&grid)?,
                k_list,
                priors,
                top_n,
                output,
            })?;
            eprintln!("{} sweep rows", rows.len());
        }
        Command::Explain {
            queries,
            query_id,
            index,
            candidates,
            candidate_id,
            vocab,
            alpha,
            format,
            output,
        } => {
            let candidates = match (index, candidates) {
                (Some(p), _) => CandidateSource::Index(p),
                (None, Some(p)) => CandidateSource::Reps(p),
                (None, None) => return Err(Error::Config("--index or --candidates is required".into())),
            };
            let print = output.is_none();
            let doc = commands::run_explain(&commands::ExplainOptions {
                queries,
                query_id,
                candidates,
                candidate_id,
                vocab,
                alpha,
                format,
                output,
            })?;
            if print {
                print!("{doc}");
            }
        }
        Command::Resources {
            h,
            n,
            k,
            format,
            index,
            queries,
            alpha,
            top_n,
            repetitions,
            parallel,
            output,
        } => {
            let latency = match (index, queries) {
                (Some(index), Some(queries)) => Some(commands::LatencyOptions {
                    index,
                    queries,
                    alpha,
                    top_n,
                    repetitions,
                    parallel,
                }),
                _ => None,
            };
            let print = output.is_none();
            let doc = commands::run_resources(&commands::ResourcesOptions {
                h,
                n,
                k,
                format,
                latency,
                output,
            })?;
            if print {
                print!("{doc}");
            }
        }
        Command::Bm25 {
            corpus,
            queries,
            k1,
            b,
            no_lowercase,
            no_unit_expansion,
            no_json_flatten,
            no_transliteration,
            out,
        } => {
            let mut rules = NormalizationRules {
                lowercase: !no_lowercase,
                json_flatten: !no_json_flatten,
                non_english_transliteration: !no_transliteration,
                ..Default::default()
            };
            if no_unit_expansion {
                rules.unit_expansion.clear();
            }
            commands::run_bm25(&commands::Bm25Options {
                corpus,
                queries,
                params: Bm25Params::new(k1, b)?,
                rules,
                top_n: out.top_n,
                trec_tag: out.trec_tag,
                output: out.output,
            })?;
        }
        Command::Loss { instances, tau, lambda_q, lambda_c, output } => {
            commands::run_loss(&commands::LossOptions {
                instances,
                config: LossConfig::new(tau, lambda_q, lambda_c)?,
                output,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
