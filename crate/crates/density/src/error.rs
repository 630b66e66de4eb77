use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("invalid clustering parameters: {0}")]
    InvalidParams(String),
    #[error("every point is noise")]
    AllNoise,
    #[error("no grid cell produced a clustering")]
    NoClusteringFound,
}
