//! Hyperedge interaction-aware hypergraph neural network.
//!
//! A layer runs three propagation stages over a hypergraph:
//!
//! 1. **N2HE**: node embeddings are aggregated into their hyperedges,
//!    optionally weighted by learned attention.
//! 2. **HE2HE**: hyperedges exchange information over the interaction graph
//!    `HᵀH`, where two hyperedges are linked when they share nodes.
//! 3. **HE2N**: the updated hyperedge embeddings are scattered back to their
//!    member nodes.
//!
//! The outlier-removal mechanism ([`hor`]) masks node/hyperedge memberships
//! whose embeddings disagree, recomputed on every forward pass.
//!
//! Everything is differentiated by a small reverse-mode engine ([`diff`]) over
//! dense `f64` matrices, which is enough to train desk-scale models and to
//! attack their input features with PGD.

pub mod data;
pub mod diff;
mod error;
pub mod hor;
pub mod hypergraph;
pub mod matrix;
pub mod model;
pub mod propagation;
pub mod rng;
pub mod sparse;

pub use error::{Error, Result};
pub use hypergraph::Hypergraph;
pub use matrix::Matrix;
pub use rng::Rng;
pub use sparse::SparseMatrix;
