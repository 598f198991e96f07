use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("non-finite entry encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("flow matrix is numerically singular or ill-conditioned (cond estimate {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("the box contains no grid point (eta too coarse for V)")]
    EmptyGrid,

    #[error("griddy sets live on different grids")]
    GridMismatch,

    #[error("box is not contained in V")]
    BoxNotContained,

    #[error("initial state is outside the controllable subspace V'")]
    X0OutsideControllable,

    #[error("no safe mode available at step {step}")]
    NoSafeMode { step: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
