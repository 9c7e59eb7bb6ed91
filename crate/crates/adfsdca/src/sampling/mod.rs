//! Discrete non-uniform sampling primitives.
//!
//! - [`AliasTable`]: O(n) build, O(1) draw; rebuilt from scratch when the
//!   distribution changes every iteration.
//! - [`SumTree`]: O(n) build, O(log n) draw and single-weight update; used
//!   when only one weight changes per iteration.
//! - [`BatchMixture`]: decomposition of an arbitrary marginal vector with
//!   `sum q_i = b` into a convex combination of "fixed prefix + uniform
//!   subset" components, each drawing exactly `b` coordinates.

mod alias;
mod minibatch;
mod sum_tree;

pub use alias::AliasTable;
pub use minibatch::{clip_marginals, BatchMixture, MixtureComponent};
pub use sum_tree::SumTree;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("degenerate distribution: all weights are zero")]
    DegenerateDistribution,
    #[error("invalid marginal: {0}")]
    InvalidMarginal(String),
    #[error("infeasible marginal: {0}")]
    InfeasibleMarginal(String),
    #[error("mixture decomposition did not terminate within the peeling-step budget")]
    NonTermination,
}
