//! Source-free unsupervised graph domain adaptation.
//!
//! A GNN trained on a labeled source graph is adapted to an unlabeled target
//! graph using only the model and the target graph, by maximizing mutual
//! information between target nodes and predictions plus a structure
//! consistency term over local and structural-role node pairs.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod diff;
pub mod error;
pub mod eval;
pub mod gnn;
pub mod graph;
pub mod pipeline;
pub mod soga;
pub mod structure;

pub use error::{Error, Result};
