use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("non-finite or divergent iterate at step {iter}")]
    NonFinite { iter: u64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("trajectory diverged; no timescale can be extracted")]
    Diverged,
    #[error("bad IDX magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated IDX data: need {needed} bytes, have {available}")]
    TruncatedFile { needed: usize, available: usize },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
