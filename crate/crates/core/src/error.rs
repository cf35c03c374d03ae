use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported modulation scheme `{0}` (expected one of bpsk, qpsk, 8psk, 16qam)")]
    UnsupportedScheme(String),

    #[error(
        "unsupported algorithm `{0}` (expected one of proposed, product, equal_weight, alrt_ub)"
    )]
    UnsupportedAlgorithm(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Blind channel estimation could not produce a usable estimate.
    #[error("blind estimation failed: {0}")]
    EstimationFailure(String),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("the ALRT benchmark needs the true channel matrix")]
    MissingChannel,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed capture payload {path}: {detail}")]
    Payload { path: PathBuf, detail: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
