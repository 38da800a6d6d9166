use thiserror::Error;

pub type Result<T, E = QError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infinite product (a;q)_inf with a={a}, q={q} has a vanishing leading factor")]
    NonConvergent { a: f64, q: f64 },

    #[error("q-exponential e(z,q) is undefined for z={z} >= 1")]
    PoleAtOne { z: f64 },

    #[error("precision exhausted: {needed} significant digits required, {available} available")]
    PrecisionExhausted { needed: u32, available: u32 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("point {x} is not on the lattice")]
    OffGrid { x: f64 },

    #[error("exponent {exp} is outside the window [{lo}, {hi}]")]
    OffWindow { exp: i32, lo: i32, hi: i32 },

    #[error("not a probability density: mass {mass}, minimum {min}")]
    NotProbability { mass: f64, min: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for QError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => QError::Io(io),
            other => QError::Parse(format!("{other:?}")),
        }
    }
}
