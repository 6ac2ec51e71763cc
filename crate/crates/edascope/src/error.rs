use std::path::PathBuf;

use edascope_core::codec::DecodeError;
use edascope_core::embedding::EmbedError;
use edascope_core::index::IndexError;
use edascope_core::recommend::RecommendError;
use edascope_core::topic::TopicError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed notebook: {0}")]
    MalformedDocument(String),
    #[error("unsupported nbformat {0}, only version 4 is read")]
    UnsupportedFormat(i64),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{0}")]
    Format(#[from] DecodeError),
    #[error("{0}")]
    Topic(#[from] TopicError),
    #[error("{0}")]
    Embed(EmbedError),
    #[error("{0}")]
    Index(IndexError),
    #[error("{0}")]
    Recommend(RecommendError),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedDocument(_) => "MalformedDocument",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::Io { .. } => "IoError",
            Error::Manifest { .. } => "ManifestError",
            Error::Format(_) => "FormatError",
            Error::Topic(TopicError::SeedConflict { .. }) => "SeedConflict",
            Error::Topic(_) => "InvalidHyperparameter",
            Error::Embed(EmbedError::DimensionMismatch { .. }) | Error::Index(IndexError::DimensionMismatch { .. }) => {
                "DimensionMismatch"
            }
            Error::Recommend(RecommendError::DimensionMismatch { .. }) => "DimensionMismatch",
            Error::Embed(EmbedError::UnknownSequence(_)) => "UnknownSequence",
            Error::Embed(EmbedError::Format(_)) => "FormatError",
            Error::Embed(EmbedError::InvalidHyperparameter(_)) => "InvalidHyperparameter",
            Error::Embed(EmbedError::QueryUnsupported) => "QueryUnsupported",
            Error::Index(IndexError::EmptyQuery) | Error::Recommend(RecommendError::EmptyQuery) => "EmptyQuery",
            Error::Index(IndexError::Embed(_)) => "EncoderError",
            Error::Index(IndexError::DuplicateId(_)) => "DuplicateId",
            Error::Index(IndexError::InvalidK) | Error::Recommend(RecommendError::InvalidLimit) => "InvalidArgument",
            Error::Index(IndexError::Format(_)) => "FormatError",
            Error::Recommend(RecommendError::InvalidHyperparameter(_)) => "InvalidHyperparameter",
            Error::Usage(_) => "UsageError",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"error": {"code": self.code(), "message": self.to_string()}})
    }
}

impl From<EmbedError> for Error {
    fn from(e: EmbedError) -> Self {
        Error::Embed(e)
    }
}

impl From<IndexError> for Error {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Embed(inner) => Error::Embed(inner),
            other => Error::Index(other),
        }
    }
}

impl From<RecommendError> for Error {
    fn from(e: RecommendError) -> Self {
        Error::Recommend(e)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
