use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("x = {x} lies outside the domain of {family}")]
    Domain { family: String, x: f64 },

    #[error("weight of {family} is singular at the endpoint x = {x}")]
    SingularWeight { family: String, x: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis mismatch: operator on {expected}, constraint on {found}")]
    BasisMismatch { expected: String, found: String },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("constraint matrix is singular for Q = {q}, N = {n} (reciprocal condition {rcond:.3e})")]
    ConstraintDegeneracy { q: usize, n: usize, rcond: f64 },

    #[error("singular endpoint system for composite function k = {k}")]
    SingularEndpointSystem { k: usize },

    #[error("Gram-Schmidt lost orthogonality (residual {residual:.3e}); use fewer modes than N = {n}")]
    OrthogonalityLoss { residual: f64, n: usize },

    #[error("time integration blew up at step {step}")]
    BlowUp { step: usize },

    #[error("eigenvalue solver failed to converge for a {n}-point rule")]
    EigenNonConvergence { n: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain { .. }
            | Error::SingularWeight { .. }
            | Error::Unsupported(_)
            | Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::BasisMismatch { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 2,
            Error::NonFinite { .. }
            | Error::ConstraintDegeneracy { .. }
            | Error::SingularEndpointSystem { .. }
            | Error::OrthogonalityLoss { .. }
            | Error::BlowUp { .. }
            | Error::EigenNonConvergence { .. } => 3,
        }
    }
}
