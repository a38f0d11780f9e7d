mod common;

use common::*;
use hybridrank::index::{HybridIndex, FORMAT_VERSION};
use hybridrank::{rank, Error, HybridEntry, ScoringConfig};
use proptest::prelude::*;
use rand::Rng;

fn build_random(seed: u64, n: usize, h: usize, vocab: usize) -> (Vec<HybridEntry>, HybridIndex) {
    let mut r = rng(seed);
    let entries = random_entries(&mut r, n, h, vocab, 20);
    let index = HybridIndex::build(entries.clone()).unwrap();
    (entries, index)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn query_equals_brute_force(seed in any::<u64>(), n in 0usize..500, alpha in 0.0f64..=1.0) {
        let (entries, index) = build_random(seed, n, 12, 200);
        let mut r = rng(seed ^ 1);
        let q = random_entry(&mut r, "q".into(), 12, 200, 20);
        let cfg = ScoringConfig::new(alpha).unwrap();
        let got = index.query(&q, &cfg, n + 1).unwrap();
        let want = rank(&q, &entries, &cfg).unwrap();
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert_eq!(&g.candidate_id, &w.candidate_id);
            prop_assert!((g.combined - w.combined).abs() <= 1e-6);
        }
        let oracle = rank_oracle(&q, &entries, alpha, 200);
        let ids: Vec<String> = got.iter().map(|c| c.candidate_id.clone()).collect();
        prop_assert_eq!(ids, oracle);
    }

    #[test]
    fn truncated_query_is_a_prefix(seed in any::<u64>(), n in 1usize..200, top in 1usize..20) {
        let (_, index) = build_random(seed, n, 8, 64);
        let mut r = rng(seed ^ 2);
        let q = random_entry(&mut r, "q".into(), 8, 64, 20);
        let cfg = ScoringConfig::default();
        let full = index.query(&q, &cfg, n).unwrap();
        let head = index.query(&q, &cfg, top).unwrap();
        prop_assert_eq!(&full[..top.min(n)], &head[..]);
    }

    #[test]
    fn round_trip_is_structural_identity(seed in any::<u64>(), n in 0usize..120) {
        let (_, index) = build_random(seed, n, 5, 300);
        let bytes = index.to_bytes().unwrap();
        let back = HybridIndex::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &index);
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn corrupting_any_payload_byte_is_detected(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (_, index) = build_random(seed, 20, 4, 50);
        let mut bytes = index.to_bytes().unwrap();
        let at = 12 + pick.index(bytes.len() - 12);
        bytes[at] ^= 0x40;
        prop_assert!(HybridIndex::from_bytes(&bytes).is_err());
    }
}

#[test]
fn postings_count_every_nonzero_weight() {
    let (entries, index) = build_random(11, 100, 4, 128);
    let nnz: usize = entries.iter().map(|e| e.sparse.len()).sum();
    let postings: usize = index.postings().values().map(Vec::len).sum();
    assert_eq!(postings, nnz);
    for e in &entries {
        let ord = index.position(&e.id).unwrap() as u32;
        for &(t, w) in e.sparse.entries() {
            let hits: Vec<_> = index.postings()[&t].iter().filter(|p| p.entry == ord).collect();
            assert_eq!(hits.len(), 1);
            assert_eq!(hits[0].weight, w);
        }
    }
    for list in index.postings().values() {
        assert!(list.windows(2).all(|w| w[0].entry < w[1].entry));
    }
}

#[test]
fn top_one_is_the_argmax() {
    let (entries, index) = build_random(5, 300, 16, 100);
    let mut r = rng(6);
    for _ in 0..20 {
        let q = random_entry(&mut r, "q".into(), 16, 100, 20);
        let alpha = r.random_range(0.0..=1.0);
        let best = index.query(&q, &ScoringConfig::new(alpha).unwrap(), 1).unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].candidate_id, rank_oracle(&q, &entries, alpha, 100)[0]);
    }
}

#[test]
fn file_round_trip_and_error_kinds() {
    let (_, index) = build_random(3, 50, 6, 80);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.hrix");
    index.save(&path).unwrap();
    assert_eq!(HybridIndex::load(&path).unwrap(), index);
    let good = std::fs::read(&path).unwrap();

    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(matches!(HybridIndex::from_bytes(&bad), Err(Error::Format(_))));

    let mut bad = good.clone();
    bad[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    assert!(matches!(HybridIndex::from_bytes(&bad), Err(Error::Version { .. })));

    for cut in [0, 3, 8, good.len() / 2, good.len() - 1] {
        assert!(HybridIndex::from_bytes(&good[..cut]).is_err(), "cut at {cut}");
    }
    assert!(matches!(HybridIndex::from_bytes(&good[..good.len() - 1]), Err(Error::Truncated(_))));

    let missing = dir.path().join("absent.hrix");
    let err = HybridIndex::load(&missing).unwrap_err();
    assert!(err.is_io_or_format());
}
