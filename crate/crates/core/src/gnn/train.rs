use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Arch, Mode, Model, ModelCheckpoint, PredictionMatrix};
use crate::diff::{Adam, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::eval::macro_f1;
use crate::graph::{Graph, GraphInput, SplitAssignment};

/// Supervised source-training settings. Defaults follow the common GCN
/// citation-benchmark configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceTrainConfig {
    pub arch: Arch,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub dropout: f64,
    pub hidden_dim: usize,
    pub heads: usize,
    pub seed: u64,
}

impl Default for SourceTrainConfig {
    fn default() -> Self {
        SourceTrainConfig {
            arch: Arch::Gcn,
            lr: 1e-2,
            weight_decay: 5e-4,
            max_epochs: 200,
            patience: 20,
            dropout: 0.5,
            hidden_dim: 128,
            heads: 2,
            seed: 1,
        }
    }
}

impl SourceTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || self.weight_decay < 0.0 || self.hidden_dim == 0 || self.heads == 0 {
            return Err(Error::config("source training: lr, hidden_dim and heads must be positive"));
        }
        if self.max_epochs > 0 && (self.patience == 0 || self.patience > self.max_epochs) {
            return Err(Error::config(format!(
                "source training: patience {} must lie in [1, max_epochs = {}]",
                self.patience, self.max_epochs
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("source training: dropout must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Mean negative log-likelihood of the observed labels over `idx`
/// (one-hot oracle distribution).
pub fn cross_entropy_loss(pred: &PredictionMatrix, labels: &[usize], idx: &[usize]) -> Result<f64> {
    let mut tape = Tape::new();
    let p = tape.constant(pred.as_tensor().clone());
    let loss = cross_entropy_on_tape(&mut tape, p, labels, idx)?;
    Ok(tape.value(loss).item())
}

pub fn cross_entropy_on_tape(tape: &mut Tape, probs: Var, labels: &[usize], idx: &[usize]) -> Result<Var> {
    if idx.is_empty() {
        return Err(Error::data("cross entropy over an empty index set"));
    }
    let (n, k) = tape.value(probs).shape();
    let mut selector = Tensor::zeros(n, k);
    for &i in idx {
        let y = *labels
            .get(i)
            .ok_or_else(|| Error::data(format!("node {i} has no label")))?;
        if y >= k || i >= n {
            return Err(Error::Shape {
                op: "cross_entropy (label vs class count)",
                left: (n, k),
                right: (i, y),
            });
        }
        selector.set(i, y, selector.get(i, y) + 1.0);
    }
    let logp = tape.log_guarded(probs);
    let picked = tape.mul_const(logp, Arc::new(selector))?;
    let total = tape.sum(picked);
    Ok(tape.scale(total, -1.0 / idx.len() as f64))
}

fn val_macro_f1(model: &ModelCheckpoint, prepared: &super::Prepared, labels: &[usize], idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let pred = model.predict_prepared(prepared)?.labels();
    let p: Vec<usize> = idx.iter().map(|&i| pred[i]).collect();
    let t: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    macro_f1(&p, &t, model.n_classes)
}

/// Supervised training on the labeled source graph with Adam, keeping the
/// epoch with the best validation Macro-F1 and stopping after `patience`
/// epochs without improvement.
pub fn train_source(g: &Graph, split: &SplitAssignment, cfg: &SourceTrainConfig) -> Result<ModelCheckpoint> {
    cfg.validate()?;
    let labels = g
        .labels()
        .ok_or_else(|| Error::data("source training needs a labeled graph"))?;
    if split.train_idx.is_empty() {
        return Err(Error::data("no labeled nodes in the training split"));
    }
    let mut model = ModelCheckpoint::init(
        cfg.arch,
        g.feature_dim(),
        cfg.hidden_dim,
        g.n_classes(),
        cfg.heads,
        cfg.dropout,
        cfg.seed,
    )?;
    let prepared = model.prepare(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5EED);
    let mut adam = Adam::new(cfg.lr).with_weight_decay(cfg.weight_decay);

    let mut best = model.clone();
    let mut best_f1 = val_macro_f1(&model, &prepared, labels, &split.val_idx)?;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut epochs_run = 0;

    for epoch in 1..=cfg.max_epochs {
        let mut tape = Tape::new();
        let vars: Vec<Var> = model.parameters().iter().map(|p| tape.param(p.clone())).collect();
        let probs = model.forward_on_tape(&mut tape, &vars, &prepared, Mode::Train, &mut rng)?;
        let loss = cross_entropy_on_tape(&mut tape, probs, labels, &split.train_idx)?;
        let loss_value = tape.value(loss).item();
        if !loss_value.is_finite() {
            return Err(Error::Numeric(format!("source loss is {loss_value} at epoch {epoch}")));
        }
        tape.backward(loss)?;
        let grads: Vec<Tensor> = vars
            .iter()
            .map(|&v| tape.grad(v).cloned().expect("leaf gradient"))
            .collect();
        let mut params = model.parameters().to_vec();
        adam.step(&mut params, &grads)?;
        model.set_parameters(params)?;
        epochs_run = epoch;

        let f1 = val_macro_f1(&model, &prepared, labels, &split.val_idx)?;
        if f1 > best_f1 {
            best_f1 = f1;
            best = model.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }

    best.meta.epochs = epochs_run;
    best.meta.best_epoch = best_epoch;
    best.meta.best_val_macro_f1 = Some(best_f1);
    Ok(best)
}
