use thiserror::Error;

use crate::graph::VertexId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: VertexId, n: usize },
    #[error("duplicate edge ({u}, {v}) in initial edge list")]
    DuplicateEdge { u: VertexId, v: VertexId },
    #[error("edge ({u}, {v}) is already present")]
    EdgeAlreadyPresent { u: VertexId, v: VertexId },
    #[error("edge ({u}, {v}) not found")]
    EdgeNotFound { u: VertexId, v: VertexId },
    #[error("weight {weight} outside [1, {max_weight}]")]
    WeightOutOfRange { weight: f64, max_weight: f64 },
    #[error("self-loop ({0}, {0}) is not allowed on this graph")]
    SelfLoopForbidden(VertexId),
    #[error("cannot sample from an empty support")]
    EmptySupport,
    #[error("initial T-parameter {t} is smaller than nis = {nis}")]
    TParamTooSmall { t: u64, nis: usize },
    #[error("T-parameter contract broken: T = {t}, previous T = {prev}, nis = {nis}")]
    TParamViolation { t: u64, prev: u64, nis: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
