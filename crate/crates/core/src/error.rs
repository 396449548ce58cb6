use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel ({x}, {y}) outside {width}x{height} image")]
    PixelOutOfBounds { x: f64, y: f64, width: u32, height: u32 },

    #[error("invalid camera pose: {0}")]
    InvalidPose(String),

    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("effective pitch {pitch_deg:.6} deg is at or beyond the vertical")]
    AboveHorizon { pitch_deg: f64 },

    #[error("invalid depth {0} m (must be finite and positive)")]
    InvalidDepth(f64),

    #[error("latitude {0} deg too close to a pole for local displacement")]
    DegenerateLatitude(f64),

    #[error("target not visible: {0}")]
    NotVisible(String),

    #[error("no valid depth under detection")]
    NoDepth,

    #[error("no pixels left to evaluate")]
    EmptyReport,

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (u32, u32), found: (u32, u32) },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures reading or writing the filesystem, as opposed to bad content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
