use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must lie strictly between 1 and 2, got {0}")]
    AlphaOutOfRange(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "merger-size envelope violated at j = {j}, i = {i}: acceptance ratio {ratio} exceeds 1, \
         the envelope constant must be enlarged"
    )]
    EnvelopeViolation { j: usize, i: usize, ratio: f64 },

    #[error("block path carries no {0}")]
    MissingField(&'static str),

    #[error("parse error at column {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("exponent zeta = {zeta} is not below the membership bound 1/alpha = {bound}")]
    Membership { zeta: f64, bound: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} above tolerance {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("window may only grow: [{new_lo}, {new_hi}] does not contain [{lo}, {hi}]")]
    WindowShrink { lo: f64, hi: f64, new_lo: f64, new_hi: f64 },

    #[error("genealogy did not reach its most recent common ancestor within depth cap {cap}")]
    DepthCap { cap: f64 },

    #[error("query time {t} requires events outside the persisted window [{lo}, {hi}]")]
    OutOfWindow { t: f64, lo: f64, hi: f64 },

    #[error("corrupt event log: {0}")]
    Corrupt(String),

    #[error("unsupported event-log version {0}")]
    Version(u32),

    #[error("compensator mismatch: closed form {closed} against quadrature {numeric}")]
    CompensatorMismatch { closed: f64, numeric: f64 },

    #[error("truncation budget exceeded: kernel tail mass {tail:e} above tolerance {tol:e}")]
    TruncationBudget { tail: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
