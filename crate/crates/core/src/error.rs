use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight spec: {0}")]
    InvalidSpec(String),

    #[error("weight evaluation out of range at x = {x}")]
    OutOfRange { x: f64 },

    #[error("weight is not integrable: leading coefficient u_2d = {leading} must be positive")]
    NonIntegrable { leading: f64 },

    #[error("quadrature did not converge: achieved relative error {achieved:e} after {levels} refinements")]
    QuadratureNotConverged { achieved: f64, levels: usize },

    #[error("moment recursion lost all significance at index {index} (value <= 0)")]
    CatastrophicCancellation { index: usize },

    #[error("moment table too short: need order {required}, table holds {available}")]
    InsufficientMoments { required: usize, available: usize },

    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    #[error("degenerate normalization g_{index} = {value:e}")]
    DegenerateNormalization { index: usize, value: f64 },

    #[error("precision exhausted in {stage} at index {index}: {detail}")]
    PrecisionExhausted {
        stage: &'static str,
        index: usize,
        detail: String,
    },

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by running out of working precision rather than by bad input.
    pub fn is_precision_exhaustion(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted { .. }
                | Error::CatastrophicCancellation { .. }
                | Error::DegenerateNormalization { .. }
                | Error::QuadratureNotConverged { .. }
                | Error::DegenerateWeight(_)
        )
    }
}
