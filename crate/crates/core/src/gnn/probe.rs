use rand_chacha::ChaCha8Rng;

use super::{Mode, Model};
use crate::diff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::GraphInput;

/// `softmax(X · W)` over frozen node features, no bias and no message
/// passing. With identity features every node owns an independent logit row.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProbe {
    params: Vec<Tensor>,
}

impl LinearProbe {
    pub fn new(weight: Tensor) -> Self {
        LinearProbe {
            params: vec![weight],
        }
    }

    pub fn weight(&self) -> &Tensor {
        &self.params[0]
    }
}

impl Model for LinearProbe {
    type Prepared = Tensor;

    fn prepare(&self, g: &dyn GraphInput) -> Result<Tensor> {
        if g.feature_dim() != self.params[0].rows() {
            return Err(Error::Shape {
                op: "linear probe",
                left: g.features().shape(),
                right: self.params[0].shape(),
            });
        }
        Ok(g.features().clone())
    }

    fn parameters(&self) -> &[Tensor] {
        &self.params
    }

    fn set_parameters(&mut self, params: Vec<Tensor>) -> Result<()> {
        if params.len() != 1 || params[0].shape() != self.params[0].shape() {
            return Err(Error::Checkpoint("probe expects one weight tensor".into()));
        }
        self.params = params;
        Ok(())
    }

    fn forward_on_tape(
        &self,
        tape: &mut Tape,
        params: &[Var],
        prepared: &Tensor,
        _mode: Mode,
        _rng: &mut ChaCha8Rng,
    ) -> Result<Var> {
        let x = tape.constant(prepared.clone());
        let z = tape.matmul(x, params[0])?;
        Ok(tape.row_softmax(z))
    }
}
