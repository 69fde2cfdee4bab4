use thiserror::Error;

pub type Result<T, E = NaoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NaoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input at the origin: {0}")]
    DegenerateOrigin(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("ambiguous arc: inputs are nearly antipodal (angle {angle:.6} rad)")]
    AmbiguousArc { angle: f64 },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl NaoError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        NaoError::InvalidInput(msg.into())
    }

    /// Process exit code used by the CLI: 2 for bad input, 3 for numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            NaoError::DegenerateOrigin(_) | NaoError::DegenerateDirection(_) => 3,
            NaoError::InvalidInput(_)
            | NaoError::AmbiguousArc { .. }
            | NaoError::Format { .. }
            | NaoError::Io(_)
            | NaoError::Json(_) => 2,
        }
    }
}
