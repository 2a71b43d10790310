use thiserror::Error;

pub type Result<T, E = BsmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BsmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("source at distance {distance:.6} m is inside the array (mic {mic}, direction {direction})")]
    SourceInsideArray {
        distance: f64,
        mic: usize,
        direction: usize,
    },

    #[error("datasets are incompatible: {0}")]
    Incompatible(String),

    #[error("regularized system is numerically singular at bin {bin}")]
    SingularSystem { bin: usize },

    #[error("reference signal has zero energy")]
    ZeroReference,

    #[error("no frequency bin survived the magnitude floor")]
    AllBinsExcluded,

    #[error("frame configuration does not satisfy constant overlap-add: {0}")]
    BadFrameConfig(String),

    #[error("payload checksum mismatch (manifest {expected}, payload {actual})")]
    ChecksumMismatch { expected: String, actual: String },

    #[error("unknown container schema: {0}")]
    SchemaUnknown(String),

    #[error("dimensions do not match payload: {0}")]
    DimsMismatch(String),

    #[error("malformed container: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BsmError {
    /// True for errors caused by mismatched or malformed data rather than numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            BsmError::Incompatible(_)
                | BsmError::ChecksumMismatch { .. }
                | BsmError::SchemaUnknown(_)
                | BsmError::DimsMismatch(_)
                | BsmError::Malformed(_)
                | BsmError::Json(_)
                | BsmError::Wav(_)
                | BsmError::Csv(_)
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            BsmError::SingularSystem { .. } | BsmError::ZeroReference | BsmError::AllBinsExcluded
        )
    }
}
