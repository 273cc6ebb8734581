use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty matrix")]
    Empty,
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("svd did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("numerically zero generator")]
    ZeroGenerator,
    #[error("sketch lost the input")]
    SketchLostInput,
    #[error("rank-deficient generator: sigma_{rho} = {sigma:e} is below the cutoff")]
    RankDeficientGenerator { rho: usize, sigma: f64 },
    #[error("columns are not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
