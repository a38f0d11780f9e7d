//! Evaluate the contrastive training objective and its sparsity
//! regularizer on a small batch.
//!
//! Run with `cargo run --example training_loss`.

use hybridrank::losses::{batch_loss, contrastive_loss, instance_loss, LossConfig, TrainingInstance};
use hybridrank::{DenseRep, SparseRep};

fn rep(dense: &[f32], sparse: &[(u32, f32)]) -> hybridrank::Result<(DenseRep, SparseRep)> {
    Ok((DenseRep::new(dense.to_vec())?, SparseRep::from_unbounded(sparse.iter().copied())?))
}

fn main() -> hybridrank::Result<()> {
    for tau in [0.5, 1.0, 2.0] {
        println!("loss(pos=1, neg=[0], tau={tau}) = {:.6}", contrastive_loss(1.0, &[0.0], tau)?);
    }

    let batch = vec![
        TrainingInstance::new(
            rep(&[1.0, 0.0], &[(1, 1.2), (4, 0.3)])?,
            rep(&[0.9, 0.1], &[(1, 1.0), (7, 0.5)])?,
            vec![rep(&[0.0, 1.0], &[(4, 0.2)])?, rep(&[-0.5, 0.5], &[(9, 2.0)])?],
        )?,
        TrainingInstance::new(
            rep(&[0.2, 0.8], &[(2, 0.9)])?,
            rep(&[0.1, 0.9], &[(2, 1.1), (3, 0.4)])?,
            vec![rep(&[0.8, 0.1], &[(3, 1.5)])?],
        )?,
    ];
    let cfg = LossConfig::default();
    for (i, inst) in batch.iter().enumerate() {
        let l = instance_loss(inst, &cfg)?;
        println!("instance {i}: dense {:.4}, lexical {:.4}", l.dense, l.lexical);
    }
    println!("{:#?}", batch_loss(&batch, &cfg)?);
    Ok(())
}
