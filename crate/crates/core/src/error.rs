use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("log-sum-exp of an empty or all -inf sequence")]
    AllNegInfinity,

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid initialization box: {0}")]
    InvalidBox(String),

    #[error("density is not differentiable at component mean {component}")]
    NonSmoothAtMean { component: usize },

    #[error("non-finite gradient of the log-target")]
    NonFiniteGradient,

    #[error("all importance weights are zero")]
    DegenerateWeights,

    #[error("estimation window contains no samples")]
    EmptyWindow,

    #[error("target has no known normalizing constant")]
    RequiresKnownZ,

    #[error("ground truth is missing {0}")]
    MissingTruth(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
