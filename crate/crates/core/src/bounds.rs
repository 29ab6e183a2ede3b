//! A priori enclosures of the positive definite solution.
//!
//! Three nested intervals are available without solving the equation:
//!
//! - the coarse interval `[Q, Q + sum A_i^* Q^{-1} A_i]`,
//! - the scalar interval `[beta I, alpha I]` from a pair of coupled scalar
//!   fixed-point equations,
//! - the refined interval `[Q + (1/alpha) sum A_i^* A_i, Q + (1/beta) sum A_i^* A_i]`,
//!   which sits inside the scalar one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_extremes, hermitian_part, inverse, smallest_singular_value, spectral_norm,
    ComplexMatrix, HermitianMatrix,
};
use crate::solver::EquationInstance;

pub const SCALAR_TOL: f64 = 1e-14;
pub const SCALAR_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarBounds {
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(alpha_k, beta_k)` for every step, starting at `beta_0 = lambda_min(Q)`.
    pub history: Vec<(f64, f64)>,
}

/// Spectral data the scalar iteration runs on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarInputs {
    pub q_min: f64,
    pub q_max: f64,
    /// `sum lambda_max(A_i^* A_i)`
    pub s_max: f64,
    /// `sum lambda_min(A_i^* A_i)`
    pub s_min: f64,
}

impl ScalarInputs {
    pub fn of(instance: &EquationInstance) -> Result<Self> {
        let (q_min, q_max) = eig_extremes(instance.q())?;
        // squared extreme singular values avoid forming A^* A
        let s_max = instance.a().iter().map(|a| spectral_norm(a).powi(2)).sum();
        let s_min = instance
            .a()
            .iter()
            .map(|a| smallest_singular_value(a).powi(2))
            .sum();
        Ok(Self {
            q_min,
            q_max,
            s_max,
            s_min,
        })
    }

    pub fn alpha_of(&self, beta: f64) -> f64 {
        self.q_max + self.s_max / beta
    }

    pub fn beta_of(&self, alpha: f64) -> f64 {
        self.q_min + self.s_min / alpha
    }
}

/// Iterates `alpha_k = q_max + s_max / beta_k`, `beta_{k+1} = q_min + s_min / alpha_k`
/// from `beta_0 = lambda_min(Q)` until consecutive pairs differ by less than `tol`.
pub fn scalar_bounds(instance: &EquationInstance, tol: f64, max_iter: usize) -> Result<ScalarBounds> {
    scalar_bounds_from(&ScalarInputs::of(instance)?, tol, max_iter)
}

pub fn scalar_bounds_from(inputs: &ScalarInputs, tol: f64, max_iter: usize) -> Result<ScalarBounds> {
    let mut beta = inputs.q_min;
    let mut alpha = inputs.alpha_of(beta);
    let mut history = vec![(alpha, beta)];
    let mut change = f64::INFINITY;
    for k in 1..=max_iter {
        let next_beta = inputs.beta_of(alpha);
        let next_alpha = inputs.alpha_of(next_beta);
        change = (next_alpha - alpha).abs() + (next_beta - beta).abs();
        alpha = next_alpha;
        beta = next_beta;
        history.push((alpha, beta));
        if change < tol {
            return Ok(ScalarBounds {
                alpha,
                beta,
                iterations: k,
                converged: true,
                history,
            });
        }
    }
    Err(Error::MaxIterationsExceeded {
        max_iter,
        last_change: change,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixInterval {
    pub lower: HermitianMatrix,
    pub upper: HermitianMatrix,
}

impl MatrixInterval {
    pub fn scalar(n: usize, lower: f64, upper: f64) -> Self {
        Self {
            lower: HermitianMatrix::scaled_identity(n, lower),
            upper: HermitianMatrix::scaled_identity(n, upper),
        }
    }

    /// `self` lies inside `outer`: both endpoint gaps are PSD up to `tol`.
    pub fn within(&self, outer: &MatrixInterval, tol: f64) -> Result<bool> {
        Ok(membership(&self.lower, outer, tol)? && membership(&self.upper, outer, tol)?)
    }
}

/// `[Q, Q + sum A_i^* Q^{-1} A_i]`.
pub fn coarse_interval(instance: &EquationInstance) -> Result<MatrixInterval> {
    let qinv = inverse(instance.q().as_matrix())?;
    let upper = instance
        .a()
        .iter()
        .fold(instance.q().as_matrix().clone(), |acc, a| &acc + &(&a.adjoint() * &(&qinv * a)));
    Ok(MatrixInterval {
        lower: instance.q().clone(),
        upper: hermitian_part(&upper)?,
    })
}

/// `[Q + (1/alpha) sum A_i^* A_i, Q + (1/beta) sum A_i^* A_i]`.
pub fn refined_interval(instance: &EquationInstance, sb: &ScalarBounds) -> Result<MatrixInterval> {
    if !sb.converged {
        return Err(Error::MaxIterationsExceeded {
            max_iter: sb.iterations,
            last_change: f64::NAN,
        });
    }
    let n = instance.n();
    let gram = instance
        .a()
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, a| &acc + &(&a.adjoint() * a));
    let gram = hermitian_part(&gram)?;
    Ok(MatrixInterval {
        lower: instance.q().add(&gram.scale(1.0 / sb.alpha)),
        upper: instance.q().add(&gram.scale(1.0 / sb.beta)),
    })
}

/// Default eigenvalue slack `n * eps * ||upper||`.
pub fn default_membership_tol(interval: &MatrixInterval) -> f64 {
    interval.upper.order() as f64 * f64::EPSILON * spectral_norm(&interval.upper)
}

/// `lower <= x <= upper` in the Loewner order, allowing eigenvalues down to `-tol`.
pub fn membership(x: &HermitianMatrix, interval: &MatrixInterval, tol: f64) -> Result<bool> {
    if x.order() != interval.lower.order() || x.order() != interval.upper.order() {
        return Err(Error::DimensionMismatch(format!(
            "matrix of order {} against interval of order {}",
            x.order(),
            interval.lower.order()
        )));
    }
    let (lo_gap, _) = eig_extremes(&x.sub(&interval.lower))?;
    let (hi_gap, _) = eig_extremes(&interval.upper.sub(x))?;
    Ok(lo_gap >= -tol && hi_gap >= -tol)
}
