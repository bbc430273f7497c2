//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Requested built-in function does not exist.
    #[error("unknown built-in function `{0}` (expected one of: exp, square, cube)")]
    NotFound(String),

    /// Expression source text failed to parse.
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    /// Expression references an identifier the grammar does not know.
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    /// Second derivative fails the convexity requirement at `x`.
    #[error("function is not strictly convex: f''({x}) = {d2}")]
    NotStrictlyConvex { x: f64, d2: f64 },

    /// An interval is invalid or lies outside the function domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// Root bracketing failed; the first derivative is not increasing on the
    /// interval (non-convex input or numeric pathology).
    #[error("convexity violation while fitting on [{lo}, {hi}]: {detail}")]
    ConvexityViolation { lo: f64, hi: f64, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A function evaluation produced a non-finite value.
    #[error("non-finite evaluation at x = {x}")]
    NonFinite { x: f64 },

    /// Network construction received a non-finite slope or node value.
    #[error("invalid input for network construction: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// A loaded file does not match the documented schema.
    #[error("schema mismatch: {0}")]
    Schema(String),
}
