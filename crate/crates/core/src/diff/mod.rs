//! Dense/sparse numerics with reverse-mode gradients and Adam.

mod adam;
mod gradcheck;
mod sparse;
mod tape;
mod tensor;

pub use adam::Adam;
pub use gradcheck::grad_check;
pub use sparse::Csr;
pub use tape::{sigmoid, Tape, Var, LOG_FLOOR};
pub use tensor::Tensor;

