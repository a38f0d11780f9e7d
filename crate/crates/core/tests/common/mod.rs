//! Straight-loop reference implementations and random fixture generators
//! shared by the integration tests. None of these call into the engine's
//! scoring or encoding code.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use hybridrank::{DenseRep, HybridEntry, SourceTag, SparseRep};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Saturate, pool and keep the `k` heaviest terms, all with plain loops in
/// `f64`. Weights are rounded to `f32` before selection since that is the
/// storage precision.
pub fn encode_oracle(rows: &[Vec<f32>], k: usize, sum: bool) -> Vec<(u32, f32)> {
    let cols = rows[0].len();
    let mut weights = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut w = 0f64;
        for row in rows {
            let x = f64::from(row[j]);
            let s = (1.0 + if x > 0.0 { x } else { 0.0 }).ln();
            if sum {
                w += s;
            } else if s > w {
                w = s;
            }
        }
        weights.push((j as u32, w as f32));
    }
    weights.retain(|&(_, w)| w > 0.0);
    weights.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    weights.truncate(k);
    weights.sort_by_key(|&(id, _)| id);
    weights
}

pub fn dense_dot_oracle(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += f64::from(a[i]) * f64::from(b[i]);
    }
    acc
}

/// Materializes both sparse vectors over the full vocabulary and dots them.
pub fn sparse_dot_oracle(a: &SparseRep, b: &SparseRep, vocab: usize) -> f64 {
    let mut va = vec![0f64; vocab];
    let mut vb = vec![0f64; vocab];
    for &(t, w) in a.entries() {
        va[t as usize] = f64::from(w);
    }
    for &(t, w) in b.entries() {
        vb[t as usize] = f64::from(w);
    }
    (0..vocab).map(|i| va[i] * vb[i]).sum()
}

/// Candidate ids sorted by a caller-supplied score, best first, ties by id.
pub fn sort_oracle(mut scored: Vec<(String, f64)>) -> Vec<String> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.into_iter().map(|(id, _)| id).collect()
}

/// `[map, r_prec, mrr_5, ndcg, hit_5, p_1]` by direct enumeration.
pub fn metrics_oracle(ranking: &[&str], relevant: &BTreeSet<String>) -> [f64; 6] {
    let r = relevant.len();
    let is_rel: Vec<bool> = ranking.iter().map(|c| relevant.contains(*c)).collect();

    let mut ap = 0.0;
    for pos in 0..ranking.len() {
        if is_rel[pos] {
            let mut seen = 0;
            for p in 0..=pos {
                if is_rel[p] {
                    seen += 1;
                }
            }
            ap += seen as f64 / (pos + 1) as f64;
        }
    }
    ap /= r as f64;

    let mut in_r = 0;
    for p in 0..ranking.len().min(r) {
        if is_rel[p] {
            in_r += 1;
        }
    }
    let rprec = in_r as f64 / r as f64;

    let mut mrr = 0.0;
    for p in 0..ranking.len().min(5) {
        if is_rel[p] {
            mrr = 1.0 / (p + 1) as f64;
            break;
        }
    }

    let mut dcg = 0.0;
    for p in 0..ranking.len() {
        if is_rel[p] {
            dcg += 1.0 / ((p + 2) as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for p in 0..r {
        idcg += 1.0 / ((p + 2) as f64).log2();
    }

    let hit5 = if is_rel.iter().take(5).any(|&x| x) { 1.0 } else { 0.0 };
    let p1 = if is_rel.first() == Some(&true) { 1.0 } else { 0.0 };
    [ap, rprec, mrr, dcg / idcg, hit5, p1]
}

pub fn random_logits<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f32>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-4.0f32..4.0)).collect())
        .collect()
}

pub fn random_dense<R: Rng>(rng: &mut R, h: usize) -> DenseRep {
    DenseRep::new((0..h).map(|_| rng.random_range(-1.0f32..1.0)).collect()).unwrap()
}

pub fn random_sparse<R: Rng>(rng: &mut R, vocab: usize, nnz: usize) -> SparseRep {
    let nnz = nnz.min(vocab);
    let pairs = sample(rng, vocab, nnz)
        .into_iter()
        .map(|t| (t as u32, rng.random_range(0.01f32..3.0)))
        .collect::<Vec<_>>();
    SparseRep::from_pairs(pairs, nnz.max(1)).unwrap()
}

pub fn random_entry<R: Rng>(rng: &mut R, id: String, h: usize, vocab: usize, max_nnz: usize) -> HybridEntry {
    let nnz = rng.random_range(0..=max_nnz);
    let source = SourceTag::ALL[rng.random_range(0..SourceTag::ALL.len())];
    HybridEntry::new(id, source, random_dense(rng, h), random_sparse(rng, vocab, nnz))
}

pub fn random_entries<R: Rng>(rng: &mut R, n: usize, h: usize, vocab: usize, max_nnz: usize) -> Vec<HybridEntry> {
    (0..n)
        .map(|i| random_entry(rng, format!("c{i:05}"), h, vocab, max_nnz))
        .collect()
}

/// Ids of `candidates` ordered by the oracle blend of raw dot products.
pub fn rank_oracle(query: &HybridEntry, candidates: &[HybridEntry], alpha: f64, vocab: usize) -> Vec<String> {
    sort_oracle(
        candidates
            .iter()
            .map(|c| {
                let d = dense_dot_oracle(query.dense.as_slice(), c.dense.as_slice());
                let l = sparse_dot_oracle(&query.sparse, &c.sparse, vocab);
                (c.id.clone(), alpha * d + (1.0 - alpha) * l)
            })
            .collect(),
    )
}

/// Result of one acceptance criterion.
pub type Check = Result<(), String>;

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
