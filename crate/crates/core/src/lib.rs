//! Sampling and approximate counting for the ferromagnetic Potts model via
//! Markov chains on `Z_q`-flows.
//!
//! The library works with three coupled Gibbs measures on a finite oriented
//! multigraph: the flow measure `mu_flow` (weight `x^|supp(f)|` per flow),
//! the random-cluster measure `mu_RC` and the Potts measure `mu_Potts`.
//! Sampling happens in flow space, where single-generator heat-bath moves
//! along an even generating set of the cycle space mix rapidly for `x` close
//! to 1; exact couplings then transport flow samples to random-cluster and
//! Potts samples, and a deletion-contraction telescope turns the sampler
//! into a partition-function estimator.
//!
//! Everything is cross-checkable at desk scale: [`oracle`] enumerates exact
//! partition functions, stationary distributions and transition matrices for
//! small instances, and the test suite pins the library against them.

pub mod counting;
pub mod couplings;
pub mod cycle_space;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod flow_chain;
pub mod graph;
pub mod joint_chain;
pub mod lattice;
pub mod oracle;
pub mod streams;

pub use error::Error;
pub use graph::{EdgeId, EdgeSubset, OrientedMultigraph, VertexId};

/// Convenience alias used by fallible operations throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
