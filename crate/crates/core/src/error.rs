use thiserror::Error;

/// Errors raised by the mask toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("ratio {0} is outside [0, 1]")]
    RatioOutOfRange(f64),
    #[error("mesh mask ratio {0} is below 0.5")]
    RatioBelowHalf(f64),
    #[error("{kept} patches must be kept but the candidate set holds only {candidates}")]
    KeptExceedsCandidates { kept: usize, candidates: usize },
    #[error("square side {side} does not fit a {cols}x{rows} grid")]
    ImpossibleGeometry { side: usize, cols: usize, rows: usize },
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("region {w}x{h} at ({x},{y}) does not lie inside a {cols}x{rows} grid")]
    RegionOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        cols: usize,
        rows: usize,
    },
    #[error("class count must be at least 1")]
    ZeroCount,
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("beta parameter must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("placement loop made no progress after {0} iterations")]
    PlacementStalled(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, MaskError>;
