//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fock index {index} out of range for truncation {n_fock}")]
    FockIndexOutOfRange { index: usize, n_fock: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error(
        "heat-flux forms disagree at t = {t}: |Eq8 - Eq9| = {discrepancy:.3e} > {tolerance:.3e}"
    )]
    HeatFormMismatch {
        t: f64,
        discrepancy: f64,
        tolerance: f64,
    },

    #[error("integrator tolerance exceeded at t = {t}: min eigenvalue {min_eig:.3e}; reduce dt")]
    IntegratorTolerance { t: f64, min_eig: f64 },

    #[error("non-finite value detected at t = {t} ({context})")]
    NanDetected { t: f64, context: &'static str },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("scenario configuration invalid:\n{0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
