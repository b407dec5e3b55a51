//! Numerical checks of the two entropy lemmas: convergence of entropy
//! descent to uniform mass on the initial argmax set, and the AUC gain from
//! hardening soft predictions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::metrics::auc_binary;
use crate::diff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::soga::conditional_entropy_on_tape;

/// Plain gradient descent on the mean conditional entropy of
/// `softmax(logits)`, one free logit row per node. Returns final logits.
pub fn descend_entropy(logits: Tensor, steps: usize, lr: f64) -> Result<Tensor> {
    let mut z = logits;
    for step in 0..steps {
        let g = entropy_gradient(&z)?;
        if !g.is_finite() {
            return Err(Error::Numeric(format!("entropy descent diverged at step {step}")));
        }
        for (v, d) in z.data_mut().iter_mut().zip(g.data()) {
            *v -= lr * d;
        }
    }
    Ok(z)
}

/// Gradient of the mean conditional entropy with respect to the logits.
pub fn entropy_gradient(logits: &Tensor) -> Result<Tensor> {
    let mut tape = Tape::new();
    let z = tape.param(logits.clone());
    let p = tape.row_softmax(z);
    let h = conditional_entropy_on_tape(&mut tape, p);
    tape.backward(h)?;
    Ok(tape.grad(z).cloned().unwrap_or_else(|| Tensor::zeros(logits.rows(), logits.cols())))
}

pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let mut tape = Tape::new();
    let z = tape.constant(logits.clone());
    let p = tape.row_softmax(z);
    tape.value(p).clone()
}

/// `1/η` on the positions holding the row maximum, 0 elsewhere.
pub fn argmax_limit(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eta = row.iter().filter(|&&v| v == max).count() as f64;
    row.iter().map(|&v| if v == max { 1.0 / eta } else { 0.0 }).collect()
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Descends entropy from the given probability rows and returns the final
/// probabilities.
pub fn descend_probability_rows(rows: &[Vec<f64>], steps: usize, lr: f64) -> Result<Vec<Vec<f64>>> {
    let logits: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
    let z = Tensor::from_rows(&logits)?;
    let n = z.rows() as f64;
    let z = descend_entropy(z, steps, lr * n)?;
    let p = softmax_rows(&z);
    Ok((0..p.rows()).map(|r| p.row(r).to_vec()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaOneConfig {
    pub k: usize,
    pub n_nodes: usize,
    pub steps: usize,
    /// Per-node step size; the mean over nodes is compensated internally.
    pub lr: f64,
    pub seed: u64,
    pub tolerance: f64,
    /// Minimum logit gap between the top two entries of non-tied rows.
    pub margin: f64,
}

impl Default for LemmaOneConfig {
    fn default() -> Self {
        LemmaOneConfig {
            k: 6,
            n_nodes: 200,
            steps: 4000,
            lr: 1.0,
            seed: 1,
            tolerance: 1e-3,
            margin: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaGroup {
    pub eta: usize,
    pub nodes: usize,
    pub max_linf_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaOneReport {
    pub config: LemmaOneConfig,
    pub max_linf_error: f64,
    pub converged_fraction: f64,
    pub groups: Vec<EtaGroup>,
}

/// Initial logits: rows with `i % 4 == 1` carry an exact 2-way tie, rows with
/// `i % 4 == 2` an exact 3-way tie, the rest a strict maximum.
fn lemma_one_logits(cfg: &LemmaOneConfig) -> Result<(Tensor, Vec<usize>)> {
    if cfg.k < 3 {
        return Err(Error::config("lemma check needs at least 3 classes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.n_nodes);
    let mut etas = Vec::with_capacity(cfg.n_nodes);
    for i in 0..cfg.n_nodes {
        let eta = match i % 4 {
            1 => 2,
            2 => 3,
            _ => 1,
        };
        let mut row: Vec<f64> = (0..cfg.k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut order: Vec<usize> = (0..cfg.k).collect();
        order.shuffle(&mut rng);
        let rest_max = order[eta..]
            .iter()
            .map(|&c| row[c])
            .fold(f64::NEG_INFINITY, f64::max);
        let top = rest_max + cfg.margin + rng.random::<f64>();
        for &c in &order[..eta] {
            row[c] = top;
        }
        rows.push(row);
        etas.push(eta);
    }
    Ok((Tensor::from_rows(&rows)?, etas))
}

pub fn verify_lemma1(cfg: &LemmaOneConfig) -> Result<LemmaOneReport> {
    let (z0, etas) = lemma_one_logits(cfg)?;
    let p0 = softmax_rows(&z0);
    let z = descend_entropy(z0, cfg.steps, cfg.lr * cfg.n_nodes as f64)?;
    let p = softmax_rows(&z);
    let mut groups: Vec<EtaGroup> = Vec::new();
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for r in 0..p.rows() {
        let err = linf(p.row(r), &argmax_limit(p0.row(r)));
        worst = worst.max(err);
        if err <= cfg.tolerance {
            within += 1;
        }
        match groups.iter_mut().find(|g| g.eta == etas[r]) {
            Some(g) => {
                g.nodes += 1;
                g.max_linf_error = g.max_linf_error.max(err);
            }
            None => groups.push(EtaGroup {
                eta: etas[r],
                nodes: 1,
                max_linf_error: err,
            }),
        }
    }
    groups.sort_by_key(|g| g.eta);
    Ok(LemmaOneReport {
        config: cfg.clone(),
        max_linf_error: worst,
        converged_fraction: within as f64 / cfg.n_nodes.max(1) as f64,
        groups,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaTwoSetup {
    /// Accuracy on the positive class.
    pub r_p: f64,
    /// Accuracy on the negative class.
    pub r_n: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub seed: u64,
    pub steps: usize,
    pub lr: f64,
}

impl Default for LemmaTwoSetup {
    fn default() -> Self {
        LemmaTwoSetup {
            r_p: 0.7,
            r_n: 0.7,
            n_pos: 100,
            n_neg: 100,
            seed: 1,
            steps: 2000,
            lr: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaTwoReport {
    pub setup: LemmaTwoSetup,
    pub lower_bound: f64,
    pub auc_before: f64,
    /// AUC of the descended but not yet snapped scores.
    pub auc_descended: f64,
    /// Largest distance of a descended row from its one-hot limit.
    pub descent_linf_error: f64,
    pub auc_after: f64,
    pub expected_after: f64,
    pub improvement: f64,
}

fn exact_count(r: f64, n: usize) -> Result<usize> {
    let c = r * n as f64;
    if !(0.0..=1.0).contains(&r) || (c - c.round()).abs() > 1e-9 {
        return Err(Error::config(format!(
            "accuracy {r} does not give a whole number of {n} samples"
        )));
    }
    Ok(c.round() as usize)
}

/// Soft positive-class scores realizing accuracies `(r_p, r_n)` with the
/// adversarial ordering: wrong negatives outrank correct positives, and
/// wrong positives rank below correct negatives.
pub fn lemma_two_scores(setup: &LemmaTwoSetup) -> Result<(Vec<f64>, Vec<bool>)> {
    if setup.n_pos == 0 || setup.n_neg == 0 {
        return Err(Error::config("both classes need samples"));
    }
    let cp = exact_count(setup.r_p, setup.n_pos)?;
    let cn = exact_count(setup.r_n, setup.n_neg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let mut draw = |lo: f64, hi: f64| lo + (hi - lo) * (0.05 + 0.9 * rng.random::<f64>());
    let mut scores = Vec::with_capacity(setup.n_pos + setup.n_neg);
    let mut labels = Vec::with_capacity(setup.n_pos + setup.n_neg);
    for i in 0..setup.n_pos {
        scores.push(if i < cp { draw(0.5, 0.75) } else { draw(0.0, 0.25) });
        labels.push(true);
    }
    for i in 0..setup.n_neg {
        scores.push(if i < cn { draw(0.25, 0.5) } else { draw(0.75, 1.0) });
        labels.push(false);
    }
    Ok((scores, labels))
}

pub fn verify_lemma2(setup: &LemmaTwoSetup) -> Result<LemmaTwoReport> {
    let (scores, labels) = lemma_two_scores(setup)?;
    let auc_before = auc_binary(&scores, &labels)?;

    let rows: Vec<Vec<f64>> = scores.iter().map(|&s| vec![1.0 - s, s]).collect();
    let descended = descend_probability_rows(&rows, setup.steps, setup.lr)?;
    let soft: Vec<f64> = descended.iter().map(|r| r[1]).collect();
    let auc_descended = auc_binary(&soft, &labels)?;
    let descent_linf_error = descended
        .iter()
        .zip(&rows)
        .map(|(d, r)| linf(d, &argmax_limit(r)))
        .fold(0.0, f64::max);

    let hardened: Vec<f64> = descended.iter().map(|r| argmax_limit(r)[1]).collect();
    let auc_after = auc_binary(&hardened, &labels)?;

    let (p, n) = (setup.n_pos, setup.n_neg);
    let (cp, cn) = (exact_count(setup.r_p, p)?, exact_count(setup.r_n, n)?);
    let expected_after = (cp * n + cn * p) as f64 / (2 * p * n) as f64;
    Ok(LemmaTwoReport {
        setup: setup.clone(),
        lower_bound: (cp * cn) as f64 / (p * n) as f64,
        auc_before,
        auc_descended,
        descent_linf_error,
        auc_after,
        expected_after,
        improvement: auc_after - auc_before,
    })
}
