//! Fully dynamic estimation of the minimum spanning forest weight of a graph
//! with edge weights in `[1, W]`, using per-update work that does not depend
//! on the number of vertices.
//!
//! The pieces, bottom up:
//! - [`NonZeroSampler`]: uniform sampling of non-isolated vertices.
//! - [`DynamicGraph`]: adjacency maps plus capped BFS.
//! - [`SmallCcCounter`]: deterministic count of small components.
//! - [`PhaseEstimator`]: randomized component count with error `eps * T`.
//! - [`MsfEstimator`]: the level decomposition combining one counter per
//!   weight threshold.
//!
//! [`oracle`] holds the brute-force references used in tests and benchmarks.

pub mod det_cc;
pub mod error;
pub mod graph;
pub mod msf;
pub mod oracle;
pub mod rand_cc;
pub mod sampler;

pub use det_cc::SmallCcCounter;
pub use error::{Error, Result};
pub use graph::{bounded_bfs, Applied, BfsResult, BoundedBfs, DynamicGraph, Update, VertexId, WeightedEdge};
pub use msf::{Mode, MsfEstimator, TParamRecord};
pub use oracle::{kruskal_msf_weight, LevelScheme};
pub use rand_cc::{EpsNEstimator, PhaseEstimator, SamplingStrategy, StaticEstimateConfig, StaticNccEstimator};
pub use sampler::NonZeroSampler;
