use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("unsupported PGM maxval {0} (at most 255 is supported)")]
    MaxvalTooLarge(u32),

    #[error("truncated pixel payload: expected {expected} samples, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("padding margin {margin} requires an image larger than {width}x{height}")]
    MarginTooLarge {
        margin: usize,
        width: usize,
        height: usize,
    },

    #[error("rectangle rows {top}..={bottom}, cols {left}..={right} outside {width}x{height} grid")]
    RectOutOfRange {
        top: usize,
        left: usize,
        bottom: usize,
        right: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("image too small: {0}")]
    ImageTooSmall(String),
}
