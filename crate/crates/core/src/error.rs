use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {name} = {value} is outside the open interval (-1, 1)")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("noise covariance BB^T is not positive semidefinite (eigenvalues {0:?})")]
    NoiseNotPsd([f64; 2]),

    #[error("degenerate observation channel: predicted observation variance {0:e} is not positive")]
    DegenerateObservation(f64),

    #[error("forecaster parameters do not satisfy the HMM constraints c = ab^2, d = e = ab")]
    NotHmm,

    #[error("invalid horizon or size: {0}")]
    InvalidArgument(String),

    #[error("joint covariance of dimension {requested} exceeds the oracle cap of {cap} time steps")]
    OracleCapExceeded { requested: usize, cap: usize },

    #[error("conditioning block is singular or not positive definite")]
    SingularConditioning,

    #[error("design matrix is rank deficient (reciprocal condition number {0:e})")]
    RankDeficient(f64),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidParams(_) => "invalid_params",
            Error::NoiseNotPsd(_) => "noise_not_psd",
            Error::DegenerateObservation(_) => "degenerate_observation",
            Error::NotHmm => "not_hmm",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::OracleCapExceeded { .. } => "oracle_cap_exceeded",
            Error::SingularConditioning => "singular_conditioning",
            Error::RankDeficient(_) => "rank_deficient",
            Error::ZeroVariance => "zero_variance",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
