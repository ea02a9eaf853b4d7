use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error at {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("parse error in {what} at line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("mesh has no texture coordinates (face at line {line} lacks a `vt` reference)")]
    MissingUv { line: usize },

    #[error("texture coordinate out of [0,1]: ({u}, {v}) at line {line}")]
    UvOutOfRange { line: usize, u: f64, v: f64 },

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("sequence has {poses} poses but {images} images")]
    CountMismatch { poses: usize, images: usize },

    #[error("pose {index} is not a rotation (orthonormality error {deviation:.3e})")]
    NonOrthonormal { index: usize, deviation: f64 },

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("image size {got_w}x{got_h} does not match camera {want_w}x{want_h}")]
    SizeMismatch {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },

    #[error("empty image")]
    EmptyImage,

    #[error("object is entirely behind the camera")]
    BehindCamera,

    #[error("object not visible in the template view")]
    NotVisible,

    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            what,
            line,
            message: message.into(),
        }
    }

    /// Short stable identifier, used for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
            Error::Parse { .. } => "parse",
            Error::MissingUv { .. } => "missing_uv",
            Error::UvOutOfRange { .. } => "uv_out_of_range",
            Error::DegenerateMesh(_) => "degenerate_mesh",
            Error::CountMismatch { .. } => "count_mismatch",
            Error::NonOrthonormal { .. } => "non_orthonormal",
            Error::InvalidCamera(_) => "invalid_camera",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::EmptyImage => "empty_image",
            Error::BehindCamera => "behind_camera",
            Error::NotVisible => "not_visible",
            Error::UnknownPrimitive(_) => "unknown_primitive",
            Error::Config(_) => "config",
            Error::FrameMismatch(_) => "frame_mismatch",
        }
    }
}
