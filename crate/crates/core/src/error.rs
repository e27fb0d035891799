use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed model token `{0}`")]
    MalformedToken(String),

    #[error("a model needs at least 3 layers (input, intermediate, sinks), got {0}")]
    TooFewLayers(usize),

    #[error("the sink layer cannot carry the `r` suffix")]
    ReducedSinkLayer,

    #[error("{sinks} sinks need as many sinker nodes, the last intermediate layer has {sinkers}")]
    TooFewSinkers { sinks: usize, sinkers: usize },

    #[error("node {0} has no links")]
    IsolatedNode(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} is nonzero at ({row}, {col}) where the topology has no link")]
    MaskViolation {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("ensemble is not one of the recognised symmetric families")]
    UnsupportedEnsemble,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
