use crate::tree::{EdgeId, Vertex};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("invalid tree spec: {0}")]
    InvalidSpec(String),
    #[error("exponent must satisfy 1 < p < inf, got {0}")]
    InvalidExponent(f64),
    #[error("boundary set is empty")]
    EmptySet,
    #[error("edge {0} is a truncation tail, not a boundary leaf")]
    TailInSet(EdgeId),
    #[error("edge {0} is not a leaf")]
    NotALeaf(EdgeId),
    #[error("tail value {value} for edge {edge} is outside [0, 1]")]
    InvalidTailValue { edge: EdgeId, value: f64 },
    #[error("edge function is not a boundary measure at edge {edge}: {reason}")]
    NotAMeasure { edge: EdgeId, reason: String },
    #[error("p-Laplacian undefined at {vertex}: {reason}")]
    UndefinedLaplacian { vertex: Vertex, reason: &'static str },
    #[error("potential reaches {potential} at {vertex}; the construction needs it below 1")]
    PotentialBound { vertex: Vertex, potential: f64 },
    #[error("operation requires p = 2, got {0}")]
    RequiresQuadratic(f64),
    #[error("measure is not an equilibrium measure (max residual {max_residual:e})")]
    NotEquilibrium { max_residual: f64 },
    #[error("tiling does not match the tree: {0}")]
    TilingMismatch(String),
    #[error("{0}")]
    OutOfRange(String),
    #[error("oracle did not converge in {iterations} iterations (bounds [{lower}, {upper}])")]
    NotConverged {
        iterations: usize,
        lower: f64,
        upper: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
