use std::io;

/// Failures reading or writing the on-disk formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: &'static str, found: String },
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("incompatible: {0}")]
    Incompatible(String),
    #[error("{0}")]
    Core(#[from] tsp_tta_core::Error),
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;
