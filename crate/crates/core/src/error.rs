use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid size {0}: need an even number of points, at least 8")]
    InvalidGrid(usize),

    #[error("field has {got} samples but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),

    #[error("non-finite sample at node {0}")]
    NonFinite(usize),

    #[error("multiplier violates conjugate symmetry at k = {k} (residue {residue:.3e})")]
    NotHermitian { k: i64, residue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
