//! Information-maximization and structure-consistency objectives, recorded
//! on a [`Tape`] so the adaptation loop can differentiate them.

use std::sync::Arc;

use crate::diff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::gnn::PredictionMatrix;
use crate::structure::PairSet;

use super::config::{MarginalMode, SogaConfig};
use super::sampler::Negatives;

/// Mean over nodes of `-Σ_y q log q` (guarded log, so `0·log 0 = 0`).
pub fn conditional_entropy_on_tape(tape: &mut Tape, probs: Var) -> Var {
    let n = tape.value(probs).rows().max(1) as f64;
    let logp = tape.log_guarded(probs);
    let plogp = tape.mul(probs, logp).expect("same shape");
    let s = tape.sum(plogp);
    tape.scale(s, -1.0 / n)
}

/// Entropy of the column-mean prediction.
pub fn marginal_entropy_on_tape(tape: &mut Tape, probs: Var) -> Var {
    let q = tape.col_mean(probs);
    let logq = tape.log_guarded(q);
    let qlogq = tape.mul(q, logq).expect("same shape");
    let s = tape.sum(qlogq);
    tape.scale(s, -1.0)
}

pub(crate) fn validate_prior(prior: &[f64], k: usize) -> Result<()> {
    if prior.len() != k {
        return Err(Error::config(format!(
            "label prior has {} entries, model has {k} classes",
            prior.len()
        )));
    }
    if prior.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::config("label prior must be strictly positive"));
    }
    let s: f64 = prior.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("label prior sums to {s}, expected 1")));
    }
    Ok(())
}

/// `KL(prior || q̄) = Σ_y prior_y log(prior_y / q̄_y)`, `q̄` the column mean.
pub fn kl_marginal_on_tape(tape: &mut Tape, probs: Var, prior: &[f64]) -> Result<Var> {
    let k = tape.value(probs).cols();
    validate_prior(prior, k)?;
    let neg_entropy: f64 = prior.iter().map(|p| p * p.ln()).sum();
    let q = tape.col_mean(probs);
    let logq = tape.log_guarded(q);
    let weights = Arc::new(Tensor::from_vec(1, k, prior.to_vec())?);
    let cross = tape.mul_const(logq, weights)?;
    let cross = tape.sum(cross);
    let neg_cross = tape.scale(cross, -1.0);
    let c = tape.constant(Tensor::scalar(neg_entropy));
    tape.add(neg_cross, c)
}

/// `w_c · (−H(Ŷ|V)) + w_m · H(Ŷ)` in entropy mode, or
/// `w_c · (−H(Ŷ|V)) − w_m · KL(prior || q̄)` in prior mode. To be maximized.
pub fn im_objective_on_tape(tape: &mut Tape, probs: Var, cfg: &SogaConfig) -> Result<Var> {
    let cond = conditional_entropy_on_tape(tape, probs);
    let cond = tape.scale(cond, -cfg.conditional_weight);
    let marg = match cfg.marginal {
        MarginalMode::Entropy => {
            let h = marginal_entropy_on_tape(tape, probs);
            tape.scale(h, cfg.marginal_weight)
        }
        MarginalMode::KlToPrior => {
            let prior = cfg
                .prior
                .as_deref()
                .ok_or_else(|| Error::config("KL marginal mode needs a label prior"))?;
            let kl = kl_marginal_on_tape(tape, probs, prior)?;
            tape.scale(kl, -cfg.marginal_weight)
        }
    };
    tape.add(cond, marg)
}

/// `Σ log σ(⟨ŷ_a, ŷ_b⟩)` over index pairs.
fn sum_log_j(tape: &mut Tape, probs: Var, a: Vec<usize>, b: Vec<usize>) -> Result<Var> {
    let ya = tape.gather_rows(probs, Arc::new(a))?;
    let yb = tape.gather_rows(probs, Arc::new(b))?;
    let inner = tape.row_inner_product(ya, yb)?;
    let j = tape.sigmoid(inner);
    let logj = tape.log_guarded(j);
    Ok(tape.sum(logj))
}

/// One pair family of the structure-consistency objective:
/// `Σ_(i,j) [log J_ij − Σ_s log J_{i,n_s}]`, optionally divided by the
/// number of pairs.
fn pair_term(
    tape: &mut Tape,
    probs: Var,
    pairs: &[(usize, usize)],
    negatives: &[usize],
    per_pair: usize,
    normalize: bool,
) -> Result<Option<Var>> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let (a, b): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
    let pos = sum_log_j(tape, probs, a, b)?;
    let mut term = pos;
    if !negatives.is_empty() {
        let anchors: Vec<usize> = pairs
            .iter()
            .flat_map(|&(i, _)| std::iter::repeat_n(i, per_pair))
            .collect();
        debug_assert_eq!(anchors.len(), negatives.len());
        let neg = sum_log_j(tape, probs, anchors, negatives.to_vec())?;
        let neg = tape.scale(neg, -1.0);
        term = tape.add(term, neg)?;
    }
    if normalize {
        term = tape.scale(term, 1.0 / pairs.len() as f64);
    }
    Ok(Some(term))
}

/// `λ1 · [local-pair term] + λ2 · [structural-pair term]`. To be maximized.
pub fn sc_objective_on_tape(
    tape: &mut Tape,
    probs: Var,
    pairs: &PairSet,
    negatives: &Negatives,
    cfg: &SogaConfig,
) -> Result<Var> {
    let mut total = tape.constant(Tensor::scalar(0.0));
    let families = [
        (cfg.lambda1, &pairs.local, &negatives.local),
        (cfg.lambda2, &pairs.structural, &negatives.structural),
    ];
    for (lambda, list, negs) in families {
        if lambda == 0.0 {
            continue;
        }
        if let Some(t) = pair_term(tape, probs, list, negs, negatives.per_pair, cfg.normalize_pairs)? {
            let t = tape.scale(t, lambda);
            total = tape.add(total, t)?;
        }
    }
    Ok(total)
}

fn eval_scalar(pred: &PredictionMatrix, f: impl FnOnce(&mut Tape, Var) -> Result<Var>) -> Result<f64> {
    let mut tape = Tape::new();
    let p = tape.constant(pred.as_tensor().clone());
    let out = f(&mut tape, p)?;
    Ok(tape.value(out).item())
}

pub fn conditional_entropy(pred: &PredictionMatrix) -> f64 {
    eval_scalar(pred, |t, p| Ok(conditional_entropy_on_tape(t, p))).expect("infallible")
}

pub fn marginal_entropy(pred: &PredictionMatrix) -> f64 {
    eval_scalar(pred, |t, p| Ok(marginal_entropy_on_tape(t, p))).expect("infallible")
}

pub fn kl_marginal(pred: &PredictionMatrix, prior: &[f64]) -> Result<f64> {
    eval_scalar(pred, |t, p| kl_marginal_on_tape(t, p, prior))
}

pub fn im_objective(pred: &PredictionMatrix, cfg: &SogaConfig) -> Result<f64> {
    eval_scalar(pred, |t, p| im_objective_on_tape(t, p, cfg))
}

pub fn sc_objective(pred: &PredictionMatrix, pairs: &PairSet, negatives: &Negatives, cfg: &SogaConfig) -> Result<f64> {
    eval_scalar(pred, |t, p| sc_objective_on_tape(t, p, pairs, negatives, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(rows: &[Vec<f64>]) -> PredictionMatrix {
        PredictionMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn conditional_entropy_examples() {
        assert_eq!(conditional_entropy(&pm(&[vec![1.0, 0.0], vec![0.0, 1.0]])), 0.0);
        let u = conditional_entropy(&pm(&vec![vec![1.0 / 6.0; 6]; 3]));
        assert!((u - 6f64.ln()).abs() < 1e-12);
        let v = conditional_entropy(&pm(&[vec![0.5, 0.5, 0.0], vec![1.0, 0.0, 0.0]]));
        assert!((v - 2f64.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_entropy_examples() {
        let v = marginal_entropy(&pm(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        assert!((v - 2f64.ln()).abs() < 1e-12);
        assert_eq!(marginal_entropy(&pm(&vec![vec![0.0, 1.0]; 4])), 0.0);
        let v = marginal_entropy(&pm(&[vec![0.8, 0.2], vec![0.4, 0.6], vec![0.6, 0.4]]));
        let want = -0.6 * 0.6f64.ln() - 0.4 * 0.4f64.ln();
        assert!((v - want).abs() < 1e-12);
        assert!((v - 0.6730).abs() < 1e-4);
    }

    #[test]
    fn kl_examples() {
        let p = pm(&[vec![0.7, 0.3], vec![0.7, 0.3]]);
        assert!(kl_marginal(&p, &[0.7, 0.3]).unwrap().abs() < 1e-12);

        let p = pm(&[vec![1.0, 0.0]]);
        let want = 0.5 * (0.5f64).ln() + 0.5 * (0.5 / 1e-12f64).ln();
        assert!((kl_marginal(&p, &[0.5, 0.5]).unwrap() - want).abs() < 1e-9);

        let p = pm(&[vec![0.5, 0.5]]);
        let want = 0.7 * 1.4f64.ln() + 0.3 * 0.6f64.ln();
        let v = kl_marginal(&p, &[0.7, 0.3]).unwrap();
        assert!((v - want).abs() < 1e-12);
        assert!((v - 0.0823).abs() < 1e-4);
    }

    #[test]
    fn kl_rejects_zero_prior() {
        let p = pm(&[vec![0.5, 0.5]]);
        assert!(kl_marginal(&p, &[1.0, 0.0]).is_err());
        assert!(kl_marginal(&p, &[0.3, 0.3]).is_err());
    }

    #[test]
    fn im_extremes() {
        let cfg = SogaConfig::default();
        let k = 4;
        let onehots: Vec<Vec<f64>> = (0..8)
            .map(|i| (0..k).map(|c| if c == i % k { 1.0 } else { 0.0 }).collect())
            .collect();
        let v = im_objective(&pm(&onehots), &cfg).unwrap();
        assert!((v - (k as f64).ln()).abs() < 1e-12);

        // Uniform rows: −ln k from the conditional term, +ln k from the marginal.
        let v = im_objective(&pm(&vec![vec![0.25; 4]; 5]), &cfg).unwrap();
        assert!(v.abs() < 1e-12);
        let cond_only = SogaConfig {
            marginal_weight: 0.0,
            ..SogaConfig::default()
        };
        let v = im_objective(&pm(&vec![vec![0.25; 4]; 5]), &cond_only).unwrap();
        assert!((v + 4f64.ln()).abs() < 1e-12);

        let v = im_objective(&pm(&vec![vec![0.0, 1.0, 0.0, 0.0]; 3]), &cfg).unwrap();
        assert_eq!(v, 0.0);
    }
}
