//! Forward values of the joint training objective.
//!
//! Each representation kind (dense and sparse) contributes a softmax
//! contrastive ranking loss over one positive and `b` negatives, and the
//! sparse side adds the FLOPS regularizer (squared mean activation per term).
//! No gradients are computed here; the functions exist to check an external
//! trainer's numbers.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repr::{DenseRep, SparseRep, TermWeights};
use crate::scoring::{dot_dense, dot_sparse};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub tau: f64,
    pub lambda_q: f64,
    pub lambda_c: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            lambda_q: 3e-4,
            lambda_c: 1e-4,
        }
    }
}

impl LossConfig {
    pub fn new(tau: f64, lambda_q: f64, lambda_c: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            lambda_q,
            lambda_c,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        for (name, v) in [("lambda_q", self.lambda_q), ("lambda_c", self.lambda_c)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("temperature must be positive, got {tau}")))
    }
}

pub type Rep = (DenseRep, SparseRep);

/// A query with one positive and at least one negative candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInstance {
    query: Rep,
    positive: Rep,
    negatives: Vec<Rep>,
}

impl TrainingInstance {
    pub fn new(query: Rep, positive: Rep, negatives: Vec<Rep>) -> Result<Self> {
        if negatives.is_empty() {
            return Err(Error::Invalid("a training instance needs at least one negative".into()));
        }
        let h = query.0.len();
        for (i, rep) in std::iter::once(&positive).chain(&negatives).enumerate() {
            if rep.0.len() != h {
                return Err(Error::Dimension {
                    what: if i == 0 {
                        "positive candidate".into()
                    } else {
                        format!("negative candidate {}", i - 1)
                    },
                    expected: h,
                    actual: rep.0.len(),
                });
            }
        }
        Ok(Self {
            query,
            positive,
            negatives,
        })
    }

    pub fn query(&self) -> &Rep {
        &self.query
    }

    pub fn positive(&self) -> &Rep {
        &self.positive
    }

    pub fn negatives(&self) -> &[Rep] {
        &self.negatives
    }
}

/// `-ln( e^{pos/tau} / (e^{pos/tau} + sum_j e^{neg_j/tau}) )`, evaluated in
/// log-sum-exp form.
pub fn contrastive_loss(pos_score: f64, neg_scores: &[f64], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if neg_scores.is_empty() {
        return Err(Error::Invalid("contrastive loss needs at least one negative".into()));
    }
    if !pos_score.is_finite() || neg_scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Invalid("scores must be finite".into()));
    }
    let pos = pos_score / tau;
    let negs: Vec<f64> = neg_scores.iter().map(|s| s / tau).collect();
    let top = negs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top <= pos {
        // Every exponent is <= 0.
        Ok(negs.iter().map(|n| (n - pos).exp()).sum::<f64>().ln_1p())
    } else {
        let rest: f64 = (pos - top).exp() + negs.iter().map(|n| (n - top).exp()).sum::<f64>();
        Ok((top - pos) + rest.ln())
    }
}

/// `sum_j ( mean_i w_j^(i) )^2` over a batch of dense weight vectors.
pub fn flops_reg(batch: &[TermWeights]) -> Result<f64> {
    let first = batch
        .first()
        .ok_or_else(|| Error::Invalid("FLOPS regularizer needs a nonempty batch".into()))?;
    let v = first.len();
    let mut sums = vec![0f64; v];
    for (i, w) in batch.iter().enumerate() {
        if w.len() != v {
            return Err(Error::Dimension {
                what: format!("batch item {i}"),
                expected: v,
                actual: w.len(),
            });
        }
        for (s, &x) in sums.iter_mut().zip(w.as_slice()) {
            *s += f64::from(x);
        }
    }
    let n = batch.len() as f64;
    Ok(sums.iter().fold(0.0, |acc, s| acc + (s / n).powi(2)))
}

/// [`flops_reg`] over sparse representations, absent tokens counting as zero.
pub fn flops_reg_sparse(batch: &[SparseRep]) -> Result<f64> {
    flops_reg_sparse_refs(batch.iter())
}

fn flops_reg_sparse_refs<'a>(batch: impl Iterator<Item = &'a SparseRep>) -> Result<f64> {
    let mut sums: BTreeMap<u32, f64> = BTreeMap::new();
    let mut n = 0usize;
    for rep in batch {
        n += 1;
        for &(id, w) in rep.entries() {
            *sums.entry(id).or_default() += f64::from(w);
        }
    }
    if n == 0 {
        return Err(Error::Invalid("FLOPS regularizer needs a nonempty batch".into()));
    }
    let n = n as f64;
    Ok(sums.values().fold(0.0, |acc, s| acc + (s / n).powi(2)))
}

/// `L_dense + L_lexical + lambda_q * reg_q + lambda_c * reg_c`.
pub fn total_loss(
    dense_rank_loss: f64,
    lexical_rank_loss: f64,
    reg_q: f64,
    reg_c: f64,
    cfg: &LossConfig,
) -> f64 {
    dense_rank_loss + lexical_rank_loss + cfg.lambda_q * reg_q + cfg.lambda_c * reg_c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceLoss {
    pub dense: f64,
    pub lexical: f64,
    /// `dense + lexical`, without regularization.
    pub total: f64,
}

/// Contrastive loss of one instance under dense and under sparse scoring.
pub fn instance_loss(inst: &TrainingInstance, cfg: &LossConfig) -> Result<InstanceLoss> {
    let (qd, qs) = &inst.query;
    let dense_pos = dot_dense(qd, &inst.positive.0)?;
    let lex_pos = dot_sparse(qs, &inst.positive.1);
    let dense_negs = inst
        .negatives
        .iter()
        .map(|(d, _)| dot_dense(qd, d))
        .collect::<Result<Vec<_>>>()?;
    let lex_negs: Vec<f64> = inst.negatives.iter().map(|(_, s)| dot_sparse(qs, s)).collect();
    let dense = contrastive_loss(dense_pos, &dense_negs, cfg.tau)?;
    let lexical = contrastive_loss(lex_pos, &lex_negs, cfg.tau)?;
    Ok(InstanceLoss {
        dense,
        lexical,
        total: dense + lexical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchLoss {
    /// Mean dense ranking loss over the batch.
    pub dense_rank: f64,
    /// Mean lexical ranking loss over the batch.
    pub lexical_rank: f64,
    /// FLOPS regularizer over the query sparse representations.
    pub reg_q: f64,
    /// FLOPS regularizer over every candidate (positives and negatives).
    pub reg_c: f64,
    pub total: f64,
}

/// Full objective for a batch. Instances are scored in parallel; sums are
/// reduced in input order.
pub fn batch_loss(batch: &[TrainingInstance], cfg: &LossConfig) -> Result<BatchLoss> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::Invalid("empty training batch".into()));
    }
    let per: Vec<InstanceLoss> = batch
        .par_iter()
        .map(|inst| instance_loss(inst, cfg))
        .collect::<Result<_>>()?;
    let n = per.len() as f64;
    let dense_rank = per.iter().map(|l| l.dense).sum::<f64>() / n;
    let lexical_rank = per.iter().map(|l| l.lexical).sum::<f64>() / n;
    let reg_q = flops_reg_sparse_refs(batch.iter().map(|i| &i.query.1))?;
    let reg_c = flops_reg_sparse_refs(batch.iter().flat_map(|i| {
        std::iter::once(&i.positive.1).chain(i.negatives.iter().map(|(_, s)| s))
    }))?;
    Ok(BatchLoss {
        dense_rank,
        lexical_rank,
        reg_q,
        reg_c,
        total: total_loss(dense_rank, lexical_rank, reg_q, reg_c, cfg),
    })
}
