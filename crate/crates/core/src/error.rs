use thiserror::Error;

use crate::perturbation::Condition;

/// Errors raised by the solver and certification routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |m_jk - conj(m_kj)| = {max_deviation:.3e})")]
    NotHermitian { max_deviation: f64 },

    #[error("matrix is not positive definite (lambda_min = {lambda_min:.6e}, tol = {tol:.3e})")]
    NotPositiveDefinite { lambda_min: f64, tol: f64 },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is singular to working precision (reciprocal condition estimate {rcond:.3e})")]
    Singular { rcond: f64 },

    #[error("Hermitian eigensolver did not converge")]
    EigenNoConvergence,

    #[error("iteration did not converge within {max_iter} iterations (last change {last_change:.3e})")]
    MaxIterationsExceeded { max_iter: usize, last_change: f64 },

    #[error("iterate {iteration} lost positive definiteness (lambda_min = {lambda_min:.3e})")]
    SingularIterate { iteration: usize, lambda_min: f64 },

    #[error("operator L is numerically singular (smallest singular value {sigma_min:.3e})")]
    SingularOperator { sigma_min: f64 },

    #[error("{bound}: hypothesis violated: {}", describe(.violated))]
    ConditionViolated {
        bound: &'static str,
        violated: Vec<Condition>,
    },

    #[error("xi2 only covers perturbations of the coefficients; ||dQ|| = {norm:.3e}")]
    NonzeroDeltaQ { norm: f64 },

    #[error("data is not real (max |imag| = {max_imag:.3e})")]
    NotReal { max_imag: f64 },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("invalid instance: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Error>),
}

fn describe(conds: &[Condition]) -> String {
    conds
        .iter()
        .map(|c| format!("{} = {:.6e}", c.name, c.value))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
