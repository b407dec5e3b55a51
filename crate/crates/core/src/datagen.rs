//! Synthetic source/target graph pairs: a stochastic block model with
//! Gaussian class-mean features, where the target differs by a density
//! ratio on edge probabilities and a common translation of the features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diff::Tensor;
use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainPairConfig {
    pub n_nodes: usize,
    pub n_classes: usize,
    pub feature_dim: usize,
    /// Source within-class edge probability.
    pub p_in: f64,
    /// Source between-class edge probability.
    pub p_out: f64,
    /// Target edge probabilities are the source ones times this.
    pub density_ratio: f64,
    /// Norm of the translation applied to every target class mean.
    pub shift: f64,
    /// Per-dimension feature noise.
    pub noise: f64,
    /// Norm of each class mean.
    pub mean_norm: f64,
    pub seed: u64,
}

impl Default for DomainPairConfig {
    fn default() -> Self {
        DomainPairConfig {
            n_nodes: 1000,
            n_classes: 4,
            feature_dim: 32,
            p_in: 0.012,
            p_out: 0.001,
            density_ratio: 1.0,
            shift: 1.0,
            noise: 1.0,
            mean_norm: 1.0,
            seed: 0,
        }
    }
}

impl DomainPairConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 || self.n_nodes < self.n_classes || self.feature_dim == 0 {
            return Err(Error::config("datagen needs k >= 2, n >= k and d >= 1"));
        }
        if !(0.0 <= self.p_out && self.p_out < self.p_in && self.p_in <= 1.0) {
            return Err(Error::config("datagen needs 0 <= p_out < p_in <= 1"));
        }
        if !(self.density_ratio > 0.0) || self.density_ratio * self.p_in > 1.0 {
            return Err(Error::config("density ratio must be positive and keep probabilities <= 1"));
        }
        if !(self.shift >= 0.0) || !(self.noise >= 0.0) || !(self.mean_norm >= 0.0) {
            return Err(Error::config("shift, noise and mean norm must be non-negative"));
        }
        Ok(())
    }
}

/// Generated pair plus the generating parameters.
#[derive(Clone, Debug)]
pub struct DomainPair {
    pub source: Graph,
    pub target: Graph,
    /// Class means shared by both domains, `k × d`.
    pub class_means: Tensor,
    /// Translation added to every target feature row.
    pub translation: Vec<f64>,
}

const STREAM_MEANS: u64 = 1;
const STREAM_SOURCE_EDGES: u64 = 2;
const STREAM_TARGET_EDGES: u64 = 3;
const STREAM_SOURCE_FEATURES: u64 = 4;
const STREAM_TARGET_FEATURES: u64 = 5;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn random_direction(rng: &mut ChaCha8Rng, d: usize, norm: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-12 {
            return v.into_iter().map(|x| x * norm / len).collect();
        }
    }
}

fn sbm(labels: &[usize], p_in: f64, p_out: f64, rng: &mut ChaCha8Rng) -> Result<Adjacency> {
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(Adjacency::from_edges(n, &edges)?.0)
}

fn features(labels: &[usize], means: &Tensor, offset: &[f64], noise: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let d = means.cols();
    let mut x = Tensor::zeros(labels.len(), d);
    for (i, &c) in labels.iter().enumerate() {
        let row = x.row_mut(i);
        for (f, v) in row.iter_mut().enumerate() {
            let eps: f64 = rng.sample(StandardNormal);
            *v = means.get(c, f) + offset[f] + noise * eps;
        }
    }
    x
}

pub fn gen_pair(cfg: &DomainPairConfig) -> Result<DomainPair> {
    cfg.validate()?;
    let (n, k, d) = (cfg.n_nodes, cfg.n_classes, cfg.feature_dim);
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();

    let mut rng = stream(cfg.seed, STREAM_MEANS);
    let mut means = Tensor::zeros(k, d);
    for c in 0..k {
        means.row_mut(c).copy_from_slice(&random_direction(&mut rng, d, cfg.mean_norm));
    }
    let translation = if cfg.shift > 0.0 {
        random_direction(&mut rng, d, cfg.shift)
    } else {
        vec![0.0; d]
    };

    let source_adj = sbm(&labels, cfg.p_in, cfg.p_out, &mut stream(cfg.seed, STREAM_SOURCE_EDGES))?;
    let rho = cfg.density_ratio;
    let target_adj = sbm(&labels, cfg.p_in * rho, cfg.p_out * rho, &mut stream(cfg.seed, STREAM_TARGET_EDGES))?;

    let zero = vec![0.0; d];
    let xs = features(&labels, &means, &zero, cfg.noise, &mut stream(cfg.seed, STREAM_SOURCE_FEATURES));
    let xt = features(&labels, &means, &translation, cfg.noise, &mut stream(cfg.seed, STREAM_TARGET_FEATURES));

    Ok(DomainPair {
        source: Graph::new(source_adj, xs, Some(labels.clone()), k)?,
        target: Graph::new(target_adj, xt, Some(labels), k)?,
        class_means: means,
        translation,
    })
}
