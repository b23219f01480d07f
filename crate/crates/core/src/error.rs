use std::path::PathBuf;

use thiserror::Error;

pub type Result<V, E = Error> = std::result::Result<V, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "matrix is not symmetric (entry ({row}, {col}) differs from its transpose by {gap:e})"
    )]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0}; brute-force oracles handle d = 1 or d = 2")]
    UnsupportedDimension(usize),

    #[error("bump profile must declare a finite sup-norm")]
    MissingSupNorm,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("footpoint projection diverged after {iterations} iterations (|theta| = {norm:e})")]
    ProjectionDiverged { iterations: usize, norm: f64 },

    #[error("optimizer diverged at step {step} (|theta| = {norm:e})")]
    Diverged { step: usize, norm: f64 },

    #[error("power iteration did not converge after {0} iterations")]
    PowerIterationStalled(usize),

    #[error("grid contains no points")]
    EmptyGrid,

    #[error("point set is empty")]
    EmptySet,

    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{path}: wrong magic number {found} (expected {expected})")]
    WrongMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated file ({found} bytes, header requires {expected})")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
