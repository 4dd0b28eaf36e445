use thiserror::Error;

/// Error type shared by all subsystems.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("near-singular solve: pivot {pivot:.3e} below threshold at row {row}")]
    NearSingular { pivot: f64, row: usize },

    #[error("classification error: {0}")]
    Classification(String),

    #[error("degenerate well: {0}")]
    DegenerateWell(String),

    #[error("potential extension failed: {0}")]
    Extension(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
