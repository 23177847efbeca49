use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not enough data: {0}")]
    TooShort(String),

    #[error("rank-deficient covariance from {n_frames} frames (l = {dim}): smallest eigenvalue {min_eigenvalue:e}")]
    RankDeficient {
        n_frames: usize,
        dim: usize,
        min_eigenvalue: f64,
    },

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("speaker {speaker}: {source}")]
    Speaker {
        speaker: String,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite cost: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error records and decision logs.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateInput(_) => "degenerate_input",
            Error::Config(_) => "config",
            Error::TooShort(_) => "too_short",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::NotSpd => "not_spd",
            Error::Mismatch(_) => "mismatch",
            Error::Speaker { source, .. } => source.kind(),
            Error::NonFinite(_) => "non_finite",
            Error::Io(_) => "io",
            Error::Wav(_) => "wav",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
