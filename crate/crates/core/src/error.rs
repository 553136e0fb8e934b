use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinslerError {
    #[error("tangent vector is zero")]
    ZeroVector,
    #[error("coordinate {axis} = {value} lies outside the chart")]
    OutOfChart { axis: usize, value: f64 },
    #[error("fundamental tensor is not positive definite (pivot {pivot:e})")]
    NotPositiveDefinite { pivot: f64 },
    #[error("matrix is numerically singular")]
    Singular,
    #[error("derivative order {requested} exceeds the engine limit {limit}")]
    OrderTooHigh { requested: usize, limit: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cannot raise the degree of a {0}-form in dimension {0}")]
    DegreeOverflow(usize),
    #[error("co-differential needs a form of degree at least 1")]
    DegreeUnderflow,
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("dimension {0} is not supported by this operation")]
    DimensionUnsupported(usize),
    #[error("fiber parameterization is degenerate at polar angle {0}")]
    PoleSingularity(f64),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = FinslerError> = std::result::Result<T, E>;
