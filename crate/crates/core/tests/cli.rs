mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use hybridrank::io::{read_entries, read_run, write_dense_file, write_hlgt_file};
use hybridrank::{DenseRep, LogitMatrix};
use serde_json::{json, Value};

const VOCAB: usize = 20;
const H: usize = 4;
const SOURCES: [&str; 4] = ["review", "cqa", "description", "attribute"];

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    bin(args).status.code().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    /// Writes logits, manifest and dense vectors for `n` items named
    /// `{prefix}{i}`, returning the raw logit rows.
    fn write_inputs(&self, stem: &str, prefix: &str, n: usize, seed: u64) -> Vec<Vec<Vec<f32>>> {
        let mut r = rng(seed);
        let rows: Vec<Vec<Vec<f32>>> = (0..n).map(|i| random_logits(&mut r, 1 + i % 3, VOCAB)).collect();
        let mats: Vec<LogitMatrix> = rows.iter().map(|m| LogitMatrix::from_rows(m).unwrap()).collect();
        write_hlgt_file(&self.path(&format!("{stem}.hlgt")), &mats).unwrap();
        let dense: Vec<DenseRep> = (0..n).map(|_| random_dense(&mut r, H)).collect();
        write_dense_file(&self.path(&format!("{stem}.dense")), H, &dense).unwrap();
        let items: Vec<Value> = (0..n)
            .map(|i| {
                let tokens: Vec<String> = (0..3).map(|t| format!("w{}", (i * 7 + t * 3) % VOCAB)).collect();
                json!({ "id": format!("{prefix}{i}"), "source": SOURCES[i % SOURCES.len()], "surface_tokens": tokens })
            })
            .collect();
        std::fs::write(self.path(&format!("{stem}.manifest.json")), json!({ "items": items }).to_string()).unwrap();
        rows
    }

    fn encode(&self, stem: &str, k: &str) -> String {
        let out = self.p(&format!("{stem}.jsonl"));
        ok(&[
            "encode",
            "--logits", &self.p(&format!("{stem}.hlgt")),
            "--manifest", &self.p(&format!("{stem}.manifest.json")),
            "--dense", &self.p(&format!("{stem}.dense")),
            "--k", k,
            "-o", &out,
        ]);
        out
    }

    /// Corpus of 12 candidates and 4 queries, encoded and indexed.
    fn standard() -> Self {
        let f = Fixture { dir: tempfile::tempdir().unwrap() };
        f.write_inputs("corpus", "d", 12, 100);
        f.write_inputs("queries", "q", 4, 200);
        f.encode("corpus", "8");
        f.encode("queries", "8");
        ok(&["index", "--reps", &f.p("corpus.jsonl"), "--vocab-size", "20", "-o", &f.p("corpus.hrix")]);
        let vocab: String = (0..VOCAB).map(|i| format!("w{i}\n")).collect();
        std::fs::write(f.path("vocab.txt"), vocab).unwrap();
        let mut qrels = String::new();
        for q in 0..4 {
            for d in [q, q + 4, (q * 5) % 12] {
                qrels.push_str(&format!("q{q} 0 d{d} 1\n"));
            }
            qrels.push_str(&format!("q{q} 0 d11 0\n"));
        }
        std::fs::write(f.path("qrels.txt"), qrels).unwrap();
        f
    }

    fn rank(&self, alpha: &str, out: &str, extra: &[&str]) -> Output {
        let (index, queries, out) = (self.p("corpus.hrix"), self.p("queries.jsonl"), self.p(out));
        let mut args = vec!["rank", "--index", &index, "--queries", &queries, "--alpha", alpha, "-o", &out];
        args.extend_from_slice(extra);
        bin(&args)
    }
}

fn run_order(path: &Path, qid: &str) -> Vec<String> {
    read_run(path).unwrap().get(qid).unwrap().iter().map(|(c, _)| c.clone()).collect()
}

#[test]
fn encode_matches_oracle_and_respects_k() {
    let f = Fixture { dir: tempfile::tempdir().unwrap() };
    let rows = f.write_inputs("one", "x", 1, 7);
    let entries = read_entries(Path::new(&f.encode("one", "5"))).unwrap();
    assert_eq!(entries.len(), 1);
    let want = encode_oracle(&rows[0], 5, false);
    let got = entries[0].sparse.entries();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(g.0, w.0);
        assert!((g.1 - w.1).abs() <= 1e-6);
    }
    assert_eq!(entries[0].source.as_str(), "review");
    assert_eq!(entries[0].surface_tokens.as_ref().unwrap().len(), 3);

    f.write_inputs("many", "y", 6, 8);
    for e in read_entries(Path::new(&f.encode("many", "1"))).unwrap() {
        assert!(e.sparse.len() <= 1);
    }
    assert!(f.path("many.jsonl.manifest.json").exists());
}

#[test]
fn empty_and_mismatched_inputs() {
    let f = Fixture { dir: tempfile::tempdir().unwrap() };
    write_hlgt_file(&f.path("e.hlgt"), &[]).unwrap();
    write_dense_file(&f.path("e.dense"), H, &[]).unwrap();
    std::fs::write(f.path("e.manifest.json"), "[]").unwrap();
    let out = f.encode("e", "4");
    assert_eq!(std::fs::read_to_string(out).unwrap(), "");

    f.write_inputs("m", "z", 3, 9);
    std::fs::write(f.path("m.manifest.json"), r#"[{"id":"z0"},{"id":"z1"}]"#).unwrap();
    let args = [
        "encode", "--logits", &f.p("m.hlgt"), "--manifest", &f.p("m.manifest.json"), "--dense", &f.p("m.dense"),
        "-o", &f.p("m.jsonl"),
    ];
    assert_eq!(code(&args), 2);
    assert!(!f.path("m.jsonl").exists());
}

#[test]
fn rank_endpoints_follow_oracles() {
    let f = Fixture::standard();
    let corpus = read_entries(&f.path("corpus.jsonl")).unwrap();
    let queries = read_entries(&f.path("queries.jsonl")).unwrap();
    for (alpha, name) in [("1.0", "dense.trec"), ("0.0", "lex.trec")] {
        assert!(f.rank(alpha, name, &[]).status.success());
        for q in &queries {
            let want = rank_oracle(q, &corpus, alpha.parse().unwrap(), VOCAB);
            assert_eq!(run_order(&f.path(name), &q.id), want, "alpha {alpha}, {}", q.id);
        }
    }
    assert!(f.rank("0.5", "top1.trec", &["--top-n", "1", "--trec-tag", "mine"]).status.success());
    let text = std::fs::read_to_string(f.path("top1.trec")).unwrap();
    assert_eq!(text.lines().count(), queries.len());
    assert!(text.lines().all(|l| l.ends_with(" mine") && l.split(' ').nth(3) == Some("1")));
}

#[test]
fn rank_without_a_needed_prior_writes_nothing() {
    let f = Fixture::standard();
    let priors = f.p("priors.json");
    std::fs::write(&priors, r#"{"review": 0.9, "cqa": 0.5}"#).unwrap();
    let out = f.rank("0.5", "scaled.trec", &["--source-priors", &priors]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("prior"));
    assert!(!f.path("scaled.trec").exists());
    assert!(!f.path("scaled.trec.manifest.json").exists());

    std::fs::write(
        f.path("priors.json"),
        r#"{"review": 0.9, "cqa": 0.5, "description": 0.7, "attribute": 0.2}"#,
    )
    .unwrap();
    let out = f.rank("0.5", "scaled.trec", &["--source-priors", &priors]);
    assert!(out.status.success());

    let out = f.rank("0.5", "filtered.trec", &["--sources", "review,cqa"]);
    assert!(out.status.success());
    let corpus = read_entries(&f.path("corpus.jsonl")).unwrap();
    let allowed: Vec<&str> = corpus
        .iter()
        .filter(|e| matches!(e.source.as_str(), "review" | "cqa"))
        .map(|e| e.id.as_str())
        .collect();
    for line in std::fs::read_to_string(f.path("filtered.trec")).unwrap().lines() {
        assert!(allowed.contains(&line.split(' ').nth(2).unwrap()));
    }
}

#[test]
fn reruns_are_reproducible_and_recorded() {
    let f = Fixture::standard();
    assert!(f.rank("0.3", "a.trec", &[]).status.success());
    assert!(f.rank("0.3", "b.trec", &[]).status.success());
    assert_eq!(std::fs::read(f.path("a.trec")).unwrap(), std::fs::read(f.path("b.trec")).unwrap());
    let read = |p: &str| -> Value { serde_json::from_str(&std::fs::read_to_string(f.path(p)).unwrap()).unwrap() };
    let (mut ma, mut mb) = (read("a.trec.manifest.json"), read("b.trec.manifest.json"));
    assert_eq!(ma["subcommand"], "rank");
    assert_eq!(ma["config"]["alpha"], 0.3);
    let digest = ma["inputs"][f.p("queries.jsonl")].as_str().unwrap().to_string();
    assert_eq!(digest.len(), 64);
    ma.as_object_mut().unwrap().remove("timestamp");
    mb.as_object_mut().unwrap().remove("timestamp");
    assert_eq!(ma, mb);
}

#[test]
fn eval_reports_significance_and_sources() {
    let f = Fixture::standard();
    assert!(f.rank("0.5", "run.trec", &[]).status.success());
    ok(&[
        "eval", "--run", &f.p("run.trec"), "--qrels", &f.p("qrels.txt"), "--baseline-run", &f.p("run.trec"),
        "--sources", &f.p("corpus.jsonl"), "--seed", "5", "--csv", &f.p("eval.csv"), "-o", &f.p("eval.json"),
    ]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(f.path("eval.json")).unwrap()).unwrap();
    assert_eq!(report["evaluated"], 4);
    for m in report["significance"]["metrics"].as_array().unwrap() {
        assert_eq!(m["fisher_p"], 1.0);
        assert_eq!(m["t_p"], 1.0);
    }
    assert_eq!(report["significance"]["seed"], 5);
    let per_source = report["per_source"].as_object().unwrap();
    assert!(!per_source.is_empty());
    assert!(per_source.keys().all(|k| SOURCES.contains(&k.as_str())));
    let csv = std::fs::read_to_string(f.path("eval.csv")).unwrap();
    assert!(csv.starts_with("query,map,r_prec,mrr_5,ndcg,hit_5,p_1\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn eval_hand_built_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run.trec");
    let qrels = dir.path().join("qrels.txt");
    std::fs::write(
        &run,
        "a Q0 x 1 3 t\na Q0 y 2 2 t\na Q0 z 3 1 t\n\
         b Q0 x 1 3 t\nb Q0 y 2 2 t\nb Q0 z 3 1 t\n\
         c Q0 x 1 3 t\nc Q0 y 2 2 t\nc Q0 z 3 1 t\n",
    )
    .unwrap();
    std::fs::write(&qrels, "a 0 x 1\nb 0 z 1\nc 0 y 1\nc 0 z 1\n").unwrap();
    let out = dir.path().join("r.json");
    ok(&["eval", "--run", run.to_str().unwrap(), "--qrels", qrels.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let agg = &r["aggregate"];
    let close = |v: &Value, want: f64| (v.as_f64().unwrap() - want).abs() < 1e-12;
    // MRR: 1, 1/3, 1/2.
    assert!(close(&agg["mrr_5"], (1.0 + 1.0 / 3.0 + 0.5) / 3.0));
    // AP: 1, 1/3, (1/2 + 2/3) / 2.
    assert!(close(&agg["map"], (1.0 + 1.0 / 3.0 + (0.5 + 2.0 / 3.0) / 2.0) / 3.0));
    assert!(close(&agg["p_1"], 1.0 / 3.0));
    assert!(close(&agg["hit_5"], 1.0));
    // R-Prec: 1, 0, 1/2.
    assert!(close(&agg["r_prec"], 0.5));
}

#[test]
fn sweep_rows_agree_with_single_runs() {
    let f = Fixture::standard();
    ok(&[
        "sweep", "--index", &f.p("corpus.hrix"), "--queries", &f.p("queries.jsonl"), "--qrels", &f.p("qrels.txt"),
        "--grid", "0,1,1", "--k-list", "8,4,64", "--auto-priors", "-o", &f.p("sweep.csv"),
    ]);
    let csv = std::fs::read_to_string(f.path("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    // k=64 exceeds the encoded sparsity and is skipped; 2 alphas x 2 ks x 2 modes.
    assert_eq!(rows.len(), 8);
    for alpha in ["0", "1"] {
        assert!(f.rank(alpha, "single.trec", &[]).status.success());
        ok(&["eval", "--run", &f.p("single.trec"), "--qrels", &f.p("qrels.txt"), "-o", &f.p("single.json")]);
        let r: Value = serde_json::from_str(&std::fs::read_to_string(f.path("single.json")).unwrap()).unwrap();
        let row = rows.iter().find(|r| r[0] == alpha && r[1] == "8" && r[2] == "raw").unwrap();
        for (i, name) in ["map", "r_prec", "mrr_5", "ndcg", "hit_5", "p_1"].iter().enumerate() {
            let want = r["aggregate"][name].as_f64().unwrap();
            let got: f64 = row[3 + i].parse().unwrap();
            assert!((got - want).abs() < 1e-6, "alpha {alpha} {name}: {got} vs {want}");
        }
    }
    assert_eq!(
        code(&[
            "sweep", "--index", &f.p("corpus.hrix"), "--queries", &f.p("queries.jsonl"), "--qrels", &f.p("qrels.txt"),
            "--k-list", "512", "-o", &f.p("none.csv"),
        ]),
        2
    );
}

#[test]
fn sweep_keeps_a_dominant_candidate_on_top() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).display().to_string();
    let reps = [
        r#"{"id":"best","source":"review","dense":[1.0,1.0],"sparse":{"1":2.0,"2":1.0}}"#,
        r#"{"id":"mid","source":"cqa","dense":[0.5,0.2],"sparse":{"1":1.0}}"#,
        r#"{"id":"low","source":"osp","dense":[-1.0,0.1],"sparse":{"3":1.0}}"#,
    ];
    std::fs::write(p("c.jsonl"), reps.join("\n")).unwrap();
    std::fs::write(p("q.jsonl"), r#"{"id":"q","dense":[1.0,0.5],"sparse":{"1":1.0,"2":0.5}}"#).unwrap();
    std::fs::write(p("qrels.txt"), "q 0 best 1\n").unwrap();
    ok(&["index", "--reps", &p("c.jsonl"), "-o", &p("c.hrix")]);
    ok(&[
        "sweep", "--index", &p("c.hrix"), "--queries", &p("q.jsonl"), "--qrels", &p("qrels.txt"),
        "--grid", "0:1:0.1", "--k-list", "2", "-o", &p("s.csv"),
    ]);
    let csv = std::fs::read_to_string(p("s.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    for row in rows {
        assert!(row.ends_with("1.000000,1.000000,1.000000,1.000000,1.000000,1.000000"), "{row}");
    }
}

#[test]
fn explain_resources_bm25_and_loss() {
    let f = Fixture::standard();
    let text = ok(&[
        "explain", "--queries", &f.p("queries.jsonl"), "--query-id", "q0", "--index", &f.p("corpus.hrix"),
        "--candidate-id", "d0", "--vocab", &f.p("vocab.txt"), "--format", "json",
    ]);
    let report: Value = serde_json::from_str(&text).unwrap();
    let total: f64 = report["records"].as_array().unwrap().iter().map(|r| r["contribution"].as_f64().unwrap()).sum();
    assert!((total - report["totals"]["lexical_score"].as_f64().unwrap()).abs() < 1e-6);
    ok(&[
        "explain", "--queries", &f.p("queries.jsonl"), "--query-id", "q0", "--candidates", &f.p("corpus.jsonl"),
        "--candidate-id", "d3", "--vocab", &f.p("vocab.txt"), "--format", "html", "-o", &f.p("x.html"),
    ]);
    assert!(std::fs::read_to_string(f.path("x.html")).unwrap().starts_with("<!DOCTYPE html>"));
    assert_eq!(
        code(&[
            "explain", "--queries", &f.p("queries.jsonl"), "--query-id", "nope", "--index", &f.p("corpus.hrix"),
            "--candidate-id", "d0", "--vocab", &f.p("vocab.txt"),
        ]),
        2
    );

    let json_out = ok(&["resources"]);
    let v: Value = serde_json::from_str(&json_out).unwrap();
    let hybrid = v["rows"].as_array().unwrap().iter().find(|r| r["scheme"] == "hybrid").unwrap();
    assert_eq!(hybrid["interaction_flops"], 1792);
    let csv = ok(&[
        "resources", "--format", "csv", "--index", &f.p("corpus.hrix"), "--queries", &f.p("queries.jsonl"),
        "--repetitions", "3",
    ]);
    assert!(csv.contains("per_query_ms,"));

    std::fs::write(
        f.path("docs.jsonl"),
        "{\"id\":\"a\",\"source\":\"attribute\",\"text\":\"{\\\"size\\\": \\\"3'' w\\\"}\"}\n{\"id\":\"b\",\"source\":\"review\",\"text\":\"great width\"}\n",
    )
    .unwrap();
    std::fs::write(f.path("bq.jsonl"), "{\"id\":\"q\",\"text\":\"Width in inches\"}\n").unwrap();
    ok(&["bm25", "--corpus", &f.p("docs.jsonl"), "--queries", &f.p("bq.jsonl"), "-o", &f.p("bm25.trec")]);
    assert_eq!(run_order(&f.path("bm25.trec"), "q"), ["a", "b"]);

    std::fs::write(
        f.path("batch.jsonl"),
        r#"{"query":{"dense":[1.0],"sparse":{"1":1.0}},"positive":{"dense":[1.0],"sparse":{"1":1.0}},"negatives":[{"dense":[0.0],"sparse":{}}]}"#,
    )
    .unwrap();
    ok(&["loss", "--instances", &f.p("batch.jsonl"), "-o", &f.p("loss.json")]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(f.path("loss.json")).unwrap()).unwrap();
    let want = (1.0 + (-1.0f64).exp()).ln();
    assert!((v["instances"][0]["dense"].as_f64().unwrap() - want).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let f = Fixture::standard();
    assert_eq!(
        code(&["index", "--reps", &f.p("absent.jsonl"), "-o", &f.p("x.hrix")]),
        3
    );
    std::fs::write(f.path("junk.hrix"), b"not an index").unwrap();
    assert_eq!(code(&["rank", "--index", &f.p("junk.hrix"), "--queries", &f.p("queries.jsonl"), "-o", &f.p("r")]), 3);
    assert_eq!(f.rank("1.5", "bad.trec", &[]).status.code(), Some(2));
    assert_eq!(code(&["rank"]), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_hybridrank"))
        .args(["resources"])
        .env("HYBRIDRANK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_hybridrank"))
        .args(["resources"])
        .env("HYBRIDRANK_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}
