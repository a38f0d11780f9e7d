//! The full file-based pipeline: encoder outputs on disk, representations,
//! an index, a run, an alpha/k sweep and an evaluation report. Every output
//! gets a `.manifest.json` with its configuration and input digests.
//!
//! Run with `cargo run --release --example file_pipeline`.

use hybridrank::commands::{
    parse_grid, run_encode, run_eval, run_index, run_rank, run_sweep, EncodeOptions, EvalOptions,
    IndexOptions, PriorSource, RankOptions, SweepOptions,
};
use hybridrank::io::{write_dense_file, write_hlgt_file};
use hybridrank::{DenseRep, EncodeConfig, LogitMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const VOCAB: usize = 64;
const H: usize = 16;
const SOURCES: [&str; 3] = ["review", "cqa", "description"];

/// Writes encoder-style outputs for `n` texts: logits, dense vectors and a manifest.
fn write_encoder_outputs(dir: &std::path::Path, stem: &str, prefix: &str, n: usize, rng: &mut ChaCha8Rng) -> hybridrank::Result<()> {
    let mats = (0..n)
        .map(|_| {
            let rows: Vec<Vec<f32>> = (0..4).map(|_| (0..VOCAB).map(|_| rng.random_range(-5.0..2.0)).collect()).collect();
            LogitMatrix::from_rows(&rows)
        })
        .collect::<hybridrank::Result<Vec<_>>>()?;
    write_hlgt_file(&dir.join(format!("{stem}.hlgt")), &mats)?;
    let dense = (0..n)
        .map(|_| DenseRep::new((0..H).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect::<hybridrank::Result<Vec<_>>>()?;
    write_dense_file(&dir.join(format!("{stem}.dense")), H, &dense)?;
    let items: Vec<_> = (0..n)
        .map(|i| json!({ "id": format!("{prefix}{i}"), "source": SOURCES[i % 3], "surface_tokens": [] }))
        .collect();
    std::fs::write(dir.join(format!("{stem}.json")), json!({ "items": items }).to_string())
        .map_err(|e| hybridrank::Error::Invalid(e.to_string()))
}

fn main() -> hybridrank::Result<()> {
    let tmp = tempfile::tempdir().map_err(|e| hybridrank::Error::Invalid(e.to_string()))?;
    let dir = tmp.path();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    write_encoder_outputs(dir, "corpus", "d", 60, &mut rng)?;
    write_encoder_outputs(dir, "queries", "q", 10, &mut rng)?;

    for stem in ["corpus", "queries"] {
        let n = run_encode(&EncodeOptions {
            logits: dir.join(format!("{stem}.hlgt")),
            manifest: dir.join(format!("{stem}.json")),
            dense: dir.join(format!("{stem}.dense")),
            config: EncodeConfig::new(16, Default::default())?,
            output: dir.join(format!("{stem}.jsonl")),
        })?;
        println!("encoded {n} {stem} items");
    }
    let index = run_index(&IndexOptions {
        reps: dir.join("corpus.jsonl"),
        vocab_size: Some(VOCAB),
        output: dir.join("corpus.hrix"),
    })?;
    println!("indexed {} entries", index.len());

    let qrels: String = (0..10).map(|q| format!("q{q} 0 d{} 1\nq{q} 0 d{} 1\n", q * 3, q * 5 + 1)).collect();
    std::fs::write(dir.join("qrels.txt"), qrels).map_err(|e| hybridrank::Error::Invalid(e.to_string()))?;

    run_rank(&RankOptions {
        index: dir.join("corpus.hrix"),
        queries: dir.join("queries.jsonl"),
        alpha: 0.5,
        top_n: 20,
        source_priors: None,
        sources: None,
        trec_tag: "example".into(),
        output: dir.join("run.trec"),
    })?;
    let report = run_eval(&EvalOptions {
        run: dir.join("run.trec"),
        qrels: dir.join("qrels.txt"),
        baseline: None,
        sources: Some(dir.join("corpus.jsonl")),
        iterations: 1000,
        seed: 0,
        csv: None,
        output: dir.join("eval.json"),
    })?;
    println!("alpha 0.5: MRR@5 {:.3}, NDCG {:.3}", report.aggregate.mrr_5, report.aggregate.ndcg);

    let rows = run_sweep(&SweepOptions {
        index: dir.join("corpus.hrix"),
        queries: dir.join("queries.jsonl"),
        qrels: dir.join("qrels.txt"),
        grid: parse_grid("0:1:0.25")?,
        k_list: vec![4, 16],
        priors: PriorSource::FromRawRanking,
        top_n: 20,
        output: dir.join("sweep.csv"),
    })?;
    for r in rows {
        println!("alpha {:.2} k {:2} {:6} MAP {:.3}", r.alpha, r.k, r.mode, r.metrics.map);
    }
    let manifest = std::fs::read_to_string(dir.join("sweep.csv.manifest.json"))
        .map_err(|e| hybridrank::Error::Invalid(e.to_string()))?;
    println!("{manifest}");
    Ok(())
}
