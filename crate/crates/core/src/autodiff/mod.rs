//! Reverse-mode automatic differentiation over dense f64 arrays.
//!
//! A [`Graph`] is an append-only arena: every operation evaluates eagerly and
//! records how to pull gradients back to its inputs. Nodes are created after
//! their parents, so arena order is already a topological order and
//! [`Graph::backward`] is a single reverse sweep. A graph lives for one forward
//! pass and is dropped afterwards.

mod graph;
mod tensor;

pub use graph::{Gradients, Graph, Var};
pub use tensor::Tensor;

/// Additive logit offset applied to masked softmax positions before the
/// masked probabilities are forced to exactly zero.
pub const MASK_OFFSET: f64 = -1e9;

/// Variance floor used by layer normalisation.
pub const LAYER_NORM_EPS: f64 = 1e-5;
