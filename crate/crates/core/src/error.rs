use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum JndError {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed PFM data: {0}")]
    Pfm(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("identical images have no finite PSNR")]
    IdenticalImages,

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("component count {count} outside [1, {max}]")]
    ComponentOutOfRange { count: usize, max: usize },

    #[error("total coefficient energy {0:e} is degenerate (constant image)")]
    DegenerateEnergy(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target PSNR {target:.3} dB is unreachable: {reason}")]
    UnreachableTarget { target: f64, reason: String },

    #[error("JND map is zero everywhere")]
    ZeroJndMap,

    #[error("codec failure: {0}")]
    Codec(String),

    #[error("malformed vote data: {0}")]
    Votes(String),

    #[error("image {image_id}: {source}")]
    InImage {
        image_id: String,
        #[source]
        source: Box<JndError>,
    },
}

impl JndError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        JndError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: (usize, usize), actual: (usize, usize)) -> Self {
        JndError::DimensionMismatch {
            expected: format!("{}x{}", expected.0, expected.1),
            actual: format!("{}x{}", actual.0, actual.1),
        }
    }

    /// True for failures caused by the filesystem or by undecodable files.
    pub fn is_io(&self) -> bool {
        match self {
            JndError::Io { .. } | JndError::Decode { .. } | JndError::UnsupportedFormat(_) => true,
            JndError::InImage { source, .. } => source.is_io(),
            _ => false,
        }
    }

    pub fn is_codec(&self) -> bool {
        match self {
            JndError::Codec(_) => true,
            JndError::InImage { source, .. } => source.is_codec(),
            _ => false,
        }
    }
}

pub type Result<T, E = JndError> = std::result::Result<T, E>;
