use thiserror::Error;

/// Errors raised across the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: basis size {requested} exceeds the configured maximum {max}")]
    Capacity { requested: usize, max: usize },

    #[error("index {index} out of range (size {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid control specification: {0}")]
    InvalidSpec(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("root bracketing failed for KL mode {mode}")]
    RootFinding { mode: usize },

    #[error("singular matrix encountered at pivot {0}")]
    Singular(usize),

    #[error("meshes are not nested: coarse n = {coarse}, fine n = {fine}")]
    NotNested { coarse: usize, fine: usize },

    #[error("solver failed at collocation point {point}: {reason}")]
    PointSolve { point: usize, reason: String },

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
