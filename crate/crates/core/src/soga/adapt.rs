use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SogaConfig;
use super::objective::{im_objective_on_tape, sc_objective_on_tape};
use super::sampler::{NegativeSampler, Negatives};
use crate::diff::{Adam, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::gnn::{Mode, Model};
use crate::graph::{GraphInput, UnlabeledGraph};
use crate::structure::PairSet;

/// Objective values recorded at one adaptation epoch (before its update).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_im: f64,
    pub l_sc: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: SogaConfig,
    pub epochs: Vec<EpochRecord>,
    pub wall_time_s: f64,
}

const DROPOUT_STREAM: u64 = 0xD80F_0A7E_5EED_0001;
const NEGATIVE_STREAM: u64 = 0x4E65_6753_616D_706C;

/// Adapts `model` to the target graph by maximizing the IM and SC
/// objectives. Returns the final-epoch model.
pub fn adapt<M: Model>(
    model: &M,
    target: &UnlabeledGraph,
    pairs: &PairSet,
    cfg: &SogaConfig,
) -> Result<(M, RunRecord)> {
    adapt_with_observer(model, target, pairs, cfg, |_, _, _| Ok(()))
}

/// As [`adapt`], calling `observer(epoch, model, prepared)` with the
/// initial model (epoch 0) and after every update.
pub fn adapt_with_observer<M, F>(
    model: &M,
    target: &UnlabeledGraph,
    pairs: &PairSet,
    cfg: &SogaConfig,
    mut observer: F,
) -> Result<(M, RunRecord)>
where
    M: Model,
    F: FnMut(usize, &M, &M::Prepared) -> Result<()>,
{
    cfg.validate()?;
    let n = target.n_nodes();
    pairs.validate(n)?;
    let start = Instant::now();
    let prepared = model.prepare(target)?;
    let mut model = model.clone();

    let use_im = cfg.conditional_weight > 0.0 || cfg.marginal_weight > 0.0;
    let use_sc = cfg.lambda1 > 0.0 || cfg.lambda2 > 0.0;
    if cfg.lambda1 > 0.0 && pairs.local.is_empty() {
        log::warn!("target graph has no edges; local pair term contributes 0");
    }
    if cfg.lambda2 > 0.0 && pairs.structural.is_empty() {
        log::warn!("no structural pairs; structural pair term contributes 0");
    }

    let mut adam = Adam::new(cfg.lr);
    let mut sampler = NegativeSampler::new(n, cfg.seed ^ NEGATIVE_STREAM);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ DROPOUT_STREAM);
    let mut records = Vec::with_capacity(cfg.epochs);

    observer(0, &model, &prepared)?;
    for epoch in 1..=cfg.epochs {
        let negatives = if use_sc {
            sampler.draw(pairs, cfg.neg)
        } else {
            Negatives::default()
        };
        let mut tape = Tape::new();
        let params: Vec<Var> = model.parameters().iter().map(|p| tape.param(p.clone())).collect();
        let probs = model.forward_on_tape(&mut tape, &params, &prepared, Mode::Train, &mut dropout_rng)?;
        let im = if use_im {
            im_objective_on_tape(&mut tape, probs, cfg)?
        } else {
            tape.constant(Tensor::scalar(0.0))
        };
        let sc = if use_sc {
            sc_objective_on_tape(&mut tape, probs, pairs, &negatives, cfg)?
        } else {
            tape.constant(Tensor::scalar(0.0))
        };
        let total = tape.add(im, sc)?;
        let loss = tape.scale(total, -1.0);
        let record = EpochRecord {
            epoch,
            l_im: tape.value(im).item(),
            l_sc: tape.value(sc).item(),
            total: tape.value(total).item(),
        };
        if !record.total.is_finite() {
            return Err(Error::Numeric(format!("non-finite adaptation loss at epoch {epoch}")));
        }
        tape.backward(loss)?;
        let grads: Vec<Tensor> = params
            .iter()
            .map(|&v| {
                tape.grad(v)
                    .cloned()
                    .ok_or_else(|| Error::Numeric("parameter received no gradient".into()))
            })
            .collect::<Result<_>>()?;
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient at epoch {epoch}")));
        }
        let mut next = model.parameters().to_vec();
        adam.step(&mut next, &grads)?;
        model.set_parameters(next)?;
        records.push(record);
        observer(epoch, &model, &prepared)?;
    }

    let record = RunRecord {
        config: cfg.clone(),
        epochs: records,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((model, record))
}
