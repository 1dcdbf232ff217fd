use thiserror::Error;

/// Errors raised by the bound engine.
///
/// Singular Fisher matrices are *not* errors: they are reported in-band
/// through [`crate::fisher::Bound`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("sample mask selects no samples")]
    EmptyMask,

    #[error("matrix is not symmetric (relative deviation {deviation:e})")]
    Asymmetric { deviation: f64 },

    #[error("matrix is singular: rank {rank} of {dim}")]
    Singular { rank: usize, dim: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("received signal energy is zero; cannot normalize SNR")]
    CannotNormalize,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { what, index, len })
    }
}
