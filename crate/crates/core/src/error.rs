//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry, measure, solver and pipeline operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid ideal point: {0}")]
    InvalidIdealPoint(String),

    #[error("invalid isometry: {0}")]
    InvalidIsometry(String),

    #[error("subcritical parameter: {0}")]
    SubcriticalParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("incompatible measures: {0}")]
    IncompatibleMeasures(String),

    #[error("ill-posed measure: {0}")]
    IllPosedMeasure(String),

    #[error("solver did not converge: {0}")]
    NonConverged(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("invalid homomorphism: {0}")]
    InvalidHomomorphism(String),

    #[error("incompatible omega spaces: {0}")]
    IncompatibleOmega(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("degenerate hessian: min eigenvalue {min_eigenvalue:e}")]
    DegenerateHessian { min_eigenvalue: f64 },

    #[error("essential bound violated: {0}")]
    EssentialBound(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
