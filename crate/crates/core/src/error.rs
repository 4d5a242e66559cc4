use std::path::PathBuf;

/// Errors produced anywhere in the cipher, attack and evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("image {dimension} {size} is not divisible by block size {block}")]
    NotDivisible {
        dimension: &'static str,
        size: usize,
        block: usize,
    },

    #[error("pixel buffer holds {actual} bytes, expected {expected} for {width}x{height} RGB")]
    BufferLength {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },

    #[error("grid of {rows}x{cols} needs {expected} tiles, got {actual}")]
    IncompleteGrid {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },

    #[error("tile {index} has side {actual}, expected {expected}")]
    TileSize {
        index: usize,
        expected: usize,
        actual: usize,
    },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("jpeg codec: {0}")]
    Codec(String),

    #[error("key file: {0}")]
    KeyFile(String),

    #[error("config: {0}")]
    Config(String),

    #[error("missing dataset file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{} is truncated at byte offset {offset} (record size {record})", path.display())]
    Truncated {
        path: PathBuf,
        offset: u64,
        record: usize,
    },

    #[error("checksum mismatch for {}: expected {expected}, got {actual}", path.display())]
    Checksum {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
