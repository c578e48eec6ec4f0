use crate::graph::NodeId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("node {0} declared twice")]
    DuplicateNode(NodeId),
    #[error("edge {0} -> {1} declared twice")]
    DuplicateEdge(NodeId, NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge endpoint {0} is not a declared node")]
    UnknownNode(NodeId),
    #[error("{what} = {value} is outside its valid range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("invalid route: {0}")]
    InvalidRoute(&'static str),
    #[error("route node {0} is not in the snapshot")]
    RouteNodeMissing(NodeId),
    #[error("no intensity given for node {0}")]
    MissingIntensity(NodeId),
    #[error("point lies on or outside the Poincaré ball boundary")]
    OutOfBall,
    #[error("gate model has non-finite parameters")]
    CorruptModel,
    #[error("scenario needs at least two candidate routes")]
    DegenerateScenario,
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}
