//! GNN architectures, the source model checkpoint and source training.
//!
//! Adaptation only ever talks to a model through the [`Model`] trait, so any
//! architecture (including the free-logit probe used for convergence
//! checks) goes through the identical adaptation path.

mod io;
mod layers;
mod probe;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::eval::MetricReport;
use crate::graph::GraphInput;

pub use io::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use layers::Prepared;
pub use probe::LinearProbe;
pub use train::{cross_entropy_loss, cross_entropy_on_tape, train_source, SourceTrainConfig};

/// Leaky-ReLU slope of the attention nonlinearity.
pub const GAT_NEGATIVE_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Gcn,
    #[serde(alias = "graphsage")]
    Sage,
    Gat,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::Gcn, Arch::Sage, Arch::Gat];

    pub(crate) fn tag(self) -> u8 {
        match self {
            Arch::Gcn => 0,
            Arch::Sage => 1,
            Arch::Gat => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Arch::Gcn),
            1 => Ok(Arch::Sage),
            2 => Ok(Arch::Gat),
            t => Err(Error::Checkpoint(format!("unknown architecture tag {t}"))),
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Gcn => "GCN",
            Arch::Sage => "GraphSAGE",
            Arch::Gat => "GAT",
        })
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Arch::Gcn),
            "sage" | "graphsage" => Ok(Arch::Sage),
            "gat" => Ok(Arch::Gat),
            other => Err(Error::config(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// `n×k` row-stochastic matrix of per-node class probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionMatrix(Tensor);

impl PredictionMatrix {
    pub fn new(t: Tensor) -> Result<Self> {
        for r in 0..t.rows() {
            let row = t.row(r);
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 || row.iter().any(|&v| !(0.0..=1.0 + 1e-12).contains(&v)) {
                return Err(Error::Numeric(format!(
                    "prediction row {r} is not a probability vector (sum {s})"
                )));
            }
        }
        Ok(PredictionMatrix(t))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        PredictionMatrix::new(Tensor::from_rows(rows)?)
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn n_nodes(&self) -> usize {
        self.0.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.0.cols()
    }

    /// Arg-max class of every node.
    pub fn labels(&self) -> Vec<usize> {
        self.0.row_argmax()
    }

    /// Scores the arg-max predictions against `truth` drawn from `k`
    /// classes. The prediction width must equal `k`.
    pub fn evaluate(&self, truth: &[usize], k: usize) -> Result<MetricReport> {
        if self.n_classes() != k || self.n_nodes() != truth.len() {
            return Err(Error::Shape {
                op: "evaluate (predictions vs labels)",
                left: self.0.shape(),
                right: (truth.len(), k),
            });
        }
        MetricReport::compute(&self.labels(), truth, k)
    }
}

/// Anything adaptation can optimize: a parameter list plus a differentiable
/// forward pass producing row-stochastic predictions.
pub trait Model: Clone + Send + Sync {
    type Prepared: Send + Sync;

    /// Precomputes graph-dependent constants (normalized adjacency etc.).
    fn prepare(&self, g: &dyn GraphInput) -> Result<Self::Prepared>;

    fn parameters(&self) -> &[Tensor];

    fn set_parameters(&mut self, params: Vec<Tensor>) -> Result<()>;

    /// Records the forward pass on `tape` using `params` (one var per
    /// parameter, in [`Model::parameters`] order) and returns the
    /// probability node.
    fn forward_on_tape(
        &self,
        tape: &mut Tape,
        params: &[Var],
        prepared: &Self::Prepared,
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<Var>;

    fn predict_prepared(&self, prepared: &Self::Prepared) -> Result<PredictionMatrix> {
        let mut tape = Tape::new();
        let params: Vec<Var> = self
            .parameters()
            .iter()
            .map(|p| tape.constant(p.clone()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = self.forward_on_tape(&mut tape, &params, prepared, Mode::Eval, &mut rng)?;
        PredictionMatrix::new(tape.value(out).clone())
    }

    fn predict(&self, g: &dyn GraphInput) -> Result<PredictionMatrix> {
        let prepared = self.prepare(g)?;
        self.predict_prepared(&prepared)
    }
}

/// Training metadata carried in the checkpoint trailer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_macro_f1: Option<f64>,
    pub dropout: f64,
}

/// A trained GNN: architecture, dimensions and parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheckpoint {
    pub arch: Arch,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub n_classes: usize,
    pub heads: usize,
    params: Vec<Tensor>,
    pub meta: CheckpointMeta,
}

impl ModelCheckpoint {
    /// Fresh model with seeded Glorot-uniform weights and zero biases.
    pub fn init(
        arch: Arch,
        feature_dim: usize,
        hidden_dim: usize,
        n_classes: usize,
        heads: usize,
        dropout: f64,
        seed: u64,
    ) -> Result<Self> {
        if feature_dim == 0 || hidden_dim == 0 || n_classes == 0 {
            return Err(Error::config("model dimensions must be positive"));
        }
        let heads = if arch == Arch::Gat { heads.max(1) } else { 1 };
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::config(format!("dropout {dropout} outside [0, 1)")));
        }
        let shapes = layers::param_shapes(arch, feature_dim, hidden_dim, n_classes, heads);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = shapes
            .iter()
            .map(|s| layers::init_param(s, &mut rng))
            .collect();
        Ok(ModelCheckpoint {
            arch,
            feature_dim,
            hidden_dim,
            n_classes,
            heads,
            params,
            meta: CheckpointMeta {
                seed,
                epochs: 0,
                best_epoch: 0,
                best_val_macro_f1: None,
                dropout,
            },
        })
    }

    /// Assembles a checkpoint from explicit tensors, checking every shape.
    pub fn from_parts(
        arch: Arch,
        feature_dim: usize,
        hidden_dim: usize,
        n_classes: usize,
        heads: usize,
        params: Vec<Tensor>,
        meta: CheckpointMeta,
    ) -> Result<Self> {
        let shapes = layers::param_shapes(arch, feature_dim, hidden_dim, n_classes, heads);
        if shapes.len() != params.len()
            || shapes.iter().zip(&params).any(|(s, p)| (s.rows, s.cols) != p.shape())
        {
            return Err(Error::Checkpoint(
                "parameter shapes inconsistent with header dimensions".into(),
            ));
        }
        Ok(ModelCheckpoint {
            arch,
            feature_dim,
            hidden_dim,
            n_classes,
            heads,
            params,
            meta,
        })
    }

    pub fn dropout(&self) -> f64 {
        self.meta.dropout
    }

    pub fn param_names(&self) -> Vec<String> {
        layers::param_shapes(
            self.arch,
            self.feature_dim,
            self.hidden_dim,
            self.n_classes,
            self.heads,
        )
        .into_iter()
        .map(|s| s.name)
        .collect()
    }
}

impl Model for ModelCheckpoint {
    type Prepared = Prepared;

    fn prepare(&self, g: &dyn GraphInput) -> Result<Prepared> {
        if g.feature_dim() != self.feature_dim {
            return Err(Error::Shape {
                op: "forward (feature dimension)",
                left: (g.n_nodes(), g.feature_dim()),
                right: (self.feature_dim, self.hidden_dim),
            });
        }
        Ok(Prepared::new(self.arch, g))
    }

    fn parameters(&self) -> &[Tensor] {
        &self.params
    }

    fn set_parameters(&mut self, params: Vec<Tensor>) -> Result<()> {
        if params.len() != self.params.len()
            || params.iter().zip(&self.params).any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::Checkpoint("replacement parameters have wrong shapes".into()));
        }
        self.params = params;
        Ok(())
    }

    fn forward_on_tape(
        &self,
        tape: &mut Tape,
        params: &[Var],
        prepared: &Prepared,
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<Var> {
        layers::forward(self, tape, params, prepared, mode, rng)
    }
}

/// Runs a checkpoint on a graph. `Mode::Train` applies dropout drawn from `rng`.
pub fn forward(
    ckpt: &ModelCheckpoint,
    g: &dyn GraphInput,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<PredictionMatrix> {
    let prepared = ckpt.prepare(g)?;
    let mut tape = Tape::new();
    let params: Vec<Var> = ckpt
        .parameters()
        .iter()
        .map(|p| tape.constant(p.clone()))
        .collect();
    let out = ckpt.forward_on_tape(&mut tape, &params, &prepared, mode, rng)?;
    PredictionMatrix::new(tape.value(out).clone())
}
