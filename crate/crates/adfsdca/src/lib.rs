//! Adaptive dual-free stochastic dual coordinate ascent (adfSDCA) for
//! l2-regularized empirical risk minimization.
//!
//! The crate provides:
//!
//! - [`losses`]: quadratic and logistic losses with derivatives, convex
//!   conjugates and smoothness constants,
//! - [`data`]: a LIBSVM-format parser producing a sparse dataset with both
//!   row and column views plus the per-sample statistics the solvers need,
//! - [`sampling`]: O(1)-draw alias tables, O(log n)-update sum trees, and a
//!   decomposition of arbitrary marginals into fixed-size mini-batch
//!   samplings,
//! - [`solver`]: the serial adaptive solver, a heuristic-shrink variant, a
//!   non-uniform mini-batch variant and a uniform baseline,
//! - [`metrics`]: primal/dual objectives, duality gap and CSV emission,
//! - [`experiment`] / [`cli`]: a harness that sweeps solver configurations
//!   over seeds and writes per-run metrics.
//!
//! Individual solver runs are strictly sequential; independent runs are
//! dispatched in parallel through rayon when the `parallel` feature (on by
//! default) is enabled.

pub mod cli;
pub mod data;
pub mod experiment;
pub mod losses;
pub mod metrics;
pub mod sampling;
pub mod solver;

pub use data::{DataError, Dataset, Regime, TheoryConstants};
pub use losses::{LossError, LossKind, LossModel};
pub use metrics::RunRecord;
pub use sampling::{AliasTable, BatchMixture, SamplingError, SumTree};
pub use solver::{SolveResult, SolverConfig, SolverError, SolverState, ThetaMode, Variant};
