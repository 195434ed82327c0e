use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while building models, parsing configuration, or
/// running linear algebra. Nonlinear non-convergence is not an error at
/// this level; it is reported through solver reports and handled by the
/// timestep controller.
#[derive(Debug, Error)]
pub enum FracflowError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("config error ({path}): {message}")]
    Config { path: String, message: String },

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("fracture index set is empty; nonlinear elimination is inapplicable")]
    EmptyFractureSet,
}

impl FracflowError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        FracflowError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FracflowError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, FracflowError>;
