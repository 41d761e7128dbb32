use thiserror::Error;

use crate::geometry::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("kernel returned negative density {value} at x={x:?}, y={y:?}")]
    NegativeKernel { x: Point, y: Point, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrand magnitude {magnitude:e} exceeds cap {cap:e} at |z|={radius:e}")]
    QuadratureOverflow { radius: f64, magnitude: f64, cap: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("killing term not resolved at x={point:?}")]
    UnresolvedKilling { point: Point },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expression parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}
