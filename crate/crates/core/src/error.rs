use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("degenerate placement: {0}")]
    DegeneratePlacement(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("geometry is frozen; cannot modify {field} of gaussian {index}")]
    GeometryFrozen { index: usize, field: &'static str },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unit mismatch: expected {expected}, found {found}")]
    UnitMismatch { expected: String, found: String },

    #[error("non-finite {term} for gaussian {gaussian}")]
    NonFinite { gaussian: usize, term: &'static str },

    #[error("optimization diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        report: Box<crate::inverse::FitReport>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
