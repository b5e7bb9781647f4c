use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("correlation order must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error("unknown shape kind `{0}`")]
    UnknownShape(String),

    #[error("grid would contain {points} points, above the cap of {cap}")]
    GridTooLarge { points: usize, cap: usize },

    #[error("correlation field sums to zero over the grid (order {order})")]
    DegenerateField { order: usize },

    #[error("every grid point falls below the probability floor")]
    AllMasked,

    #[error("cumulant order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("too many sources for subset enumeration: {0}")]
    TooManySources(usize),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
