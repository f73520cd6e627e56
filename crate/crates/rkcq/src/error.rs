use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix was singular to working precision during factorization.
    #[error("singular matrix in {context}: pivot magnitude {pivot:.3e}")]
    Singular { context: &'static str, pivot: f64 },

    /// An eigenvector matrix was too ill-conditioned to diagonalize with.
    #[error("defective matrix: eigenvector condition estimate {cond:.3e} exceeds {limit:.3e}")]
    Defective { cond: f64, limit: f64 },

    /// Evaluation requested outside the domain of validity of an operator.
    #[error("domain error: {0}")]
    Domain(String),

    /// Dimension mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Invalid or inconsistent mesh.
    #[error("mesh error: {0}")]
    Mesh(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Evaluation at a pole of a rational function.
    #[error("pole of stability function at z = {0}")]
    Pole(num_complex::Complex64),

    /// Time stepping failed at a given step.
    #[error("time step {step} failed: {reason}")]
    Step { step: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
