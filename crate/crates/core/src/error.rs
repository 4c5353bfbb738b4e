use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape {shape:?}: {reason}")]
    InvalidShape { shape: Vec<usize>, reason: String },

    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index:?} out of bounds for shape {shape:?}")]
    IndexOutOfBounds { index: Vec<usize>, shape: Vec<usize> },

    #[error("input contains non-finite entries")]
    NonFinite,

    #[error("expected {expected} ranks, got {got}")]
    RankArity { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid rank: {0}")]
    InvalidRank(String),

    #[error("invalid sketch parameters: {0}")]
    InvalidSketch(String),

    #[error("sketch core is numerically singular (min |T_ii| = {min_pivot:e}, max |T_ii| = {max_pivot:e}); retry with another seed")]
    IllConditionedSketch { min_pivot: f64, max_pivot: f64 },

    #[error("SVD did not converge")]
    SvdNotConverged,

    #[error("reference tensor has zero {0} norm")]
    ZeroNorm(&'static str),

    #[error("reference tensor is constant; R^2 is undefined")]
    ConstantReference,

    #[error("operation requires a 3-D tensor, got order {0}")]
    NotThreeDimensional(usize),

    #[error("invalid Gaussian mixture: {0}")]
    InvalidMixture(String),

    #[error("covariance matrix {0} is not symmetric positive definite")]
    SingularCovariance(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Failures while decoding a DTEN container.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic bytes {0:?}, expected \"DTEN\"")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("{0} trailing bytes after payload")]
    TrailingBytes(u64),

    #[error("invalid sidecar metadata: {0}")]
    Sidecar(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
