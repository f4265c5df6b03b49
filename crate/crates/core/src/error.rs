use thiserror::Error;

/// Error type shared by all modules.
///
/// `OutOfRangeX` is a signal rather than a fault: the mixing-time bounds
/// only apply above an instance-dependent threshold for the fugacity `x`,
/// and callers (notably the CLI) are expected to report the threshold and
/// bail out gracefully.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("vertex id {vertex} out of range (n = {n})")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("edge id {0} out of range")]
    EdgeOutOfRange(usize),

    #[error("edge {0} is dead (deleted or contracted)")]
    DeadEdge(usize),

    #[error("edge {0} is a loop; loops cannot be contracted")]
    LoopContraction(usize),

    #[error("generator {index} is not a Z-flow on this graph")]
    NotAFlow { index: usize },

    #[error("x = {x} out of range: mixing bound requires x > {threshold}")]
    OutOfRangeX { x: f64, threshold: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for exact enumeration: {what} = {size} exceeds {limit}")]
    TooLarge {
        what: &'static str,
        size: f64,
        limit: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
