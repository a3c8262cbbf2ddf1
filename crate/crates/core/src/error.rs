use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Variants split into configuration problems (bad input, violated
/// preconditions) and numerical failures (a solver did not converge, or
/// two routes of a cross-check disagree); see [`WeylError::is_numerical`].
#[derive(Debug, Error)]
pub enum WeylError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol is not separable: {0}")]
    NotSeparable(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("cell grid does not cover sampled value {re:.6}{im:+.6}i")]
    CellGridTooSmall { re: f64, im: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{0} did not converge after {1} iterations")]
    NoConvergence(&'static str, usize),

    #[error("matrix is singular")]
    Singular,

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("inconsistent determinant flags: {0}")]
    InconsistentFlags(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl WeylError {
    /// True for failures of the numerics rather than of the configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            WeylError::NoConvergence(..)
                | WeylError::Singular
                | WeylError::InconsistentFlags(_)
                | WeylError::DegenerateRegression(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, WeylError>;
