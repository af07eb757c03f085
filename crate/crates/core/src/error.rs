use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by gapkit operations.
#[derive(Debug, Error)]
pub enum GapError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed npy file {path}: {reason}")]
    NpyFormat { path: PathBuf, reason: String },

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },

    #[error("duplicate id {id:?} at row {row}")]
    DuplicateId { id: String, row: usize },

    #[error("id count {ids} does not match row count {rows}")]
    IdCountMismatch { ids: usize, rows: usize },

    #[error("dimension mismatch: {left} vs {right} columns")]
    DimensionMismatch { left: usize, right: usize },

    #[error("pair count mismatch: {left} vs {right} rows")]
    PairCountMismatch { left: usize, right: usize },

    #[error("zero-norm row {row}")]
    ZeroNormRow { row: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asym:.3e})")]
    NotSymmetric { max_asym: f64 },

    #[error("mass matrix entry {value:.3e} at index {index} is not positive")]
    NonPositiveMass { index: usize, value: f64 },

    #[error("not PSD: eigenvalue {value:.6e} below tolerance")]
    NotPsd { value: f64 },

    #[error("insufficient non-null spectrum: requested {requested}, only {available} eigenvalues >= null tolerance")]
    InsufficientSpectrum { requested: usize, available: usize },

    #[error("isolated nodes (zero degree) at rows {rows:?}")]
    IsolatedNodes { rows: Vec<usize> },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("marginal mismatch: source mass {source_mass:.12e} vs target mass {target_mass:.12e}")]
    MarginalMismatch { source_mass: f64, target_mass: f64 },

    #[error("negative mass at index {index}")]
    NegativeMass { index: usize },

    #[error("zero variance in paired differences")]
    ZeroVariance,

    #[error("too few samples: need at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("{0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, GapError>;
