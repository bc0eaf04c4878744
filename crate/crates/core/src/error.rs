use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parameter point ({u}, {v}) lies outside the surface domain")]
    OutOfDomain { u: f64, v: f64 },

    #[error("degenerate metric at ({u}, {v}): det = {det:e}")]
    DegenerateMetric { u: f64, v: f64, det: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("mesh refinement error: {0}")]
    Refinement(String),

    #[error("invalid edge flip: {0}")]
    InvalidFlip(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::OutOfDomain { .. }
                | Error::Resolution(_)
                | Error::Unsupported(_)
                | Error::Json(_)
        )
    }
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
