//! Source-free adaptation: information maximization plus structure
//! consistency, optimized over a source model's parameters with only the
//! unlabeled target graph in view.

mod adapt;
mod config;
mod objective;
mod sampler;

pub use adapt::{adapt, adapt_with_observer, EpochRecord, RunRecord};
pub use config::{MarginalMode, SogaConfig, Variant};
pub use objective::{
    conditional_entropy, conditional_entropy_on_tape, im_objective, im_objective_on_tape, kl_marginal,
    kl_marginal_on_tape, marginal_entropy, marginal_entropy_on_tape, sc_objective, sc_objective_on_tape,
};
pub use sampler::{NegativeSampler, Negatives};
