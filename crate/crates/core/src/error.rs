use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("image too small: {width}x{height} (minimum {min}x{min})")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: &'static str, message: String },
    #[error("non-finite pixel value at ({x}, {y})")]
    NonFinite { x: usize, y: usize },
    #[error("pixel ({x}, {y}) is out of bounds for a {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("degenerate filter at scale {scale}: zero response to the calibration step")]
    DegenerateFilter { scale: usize },
    #[error("coefficient volume was computed with a different shearlet system")]
    SystemMismatch,
    #[error("distance transform needs at least one reference pixel")]
    EmptyReference,
    #[error("skeleton is not thin: pixel ({x}, {y}) has {neighbors} neighbors and can be removed")]
    NotThin { x: usize, y: usize, neighbors: usize },
    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            message: message.into(),
        }
    }
}
