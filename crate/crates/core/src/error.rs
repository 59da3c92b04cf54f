use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("integrand error: {0}")]
    Integrand(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("form degree {q} out of range 0..={n}")]
    DegreeOutOfRange { q: usize, n: usize },

    #[error("degenerate curvature: {0}")]
    Degenerate(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("point refused: {0}")]
    Refused(String),

    #[error("rank undefined: {0}")]
    RankUndefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
