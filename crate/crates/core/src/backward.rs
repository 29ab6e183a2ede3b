//! Residual-based error bound for an approximate solution.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{eig_extremes, inverse, spectral_norm, HermitianMatrix};
use crate::solver::{residual, EquationInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardErrorReport {
    /// `sum_i ||Xt^{-1} A_i||^2`
    pub sigma: f64,
    pub residual_norm: f64,
    pub lambda_min: f64,
    /// Largest residual norm for which the bound applies.
    pub threshold: f64,
    /// `None` when infeasible.
    pub theta: Option<f64>,
    /// `theta * ||R||`, the bound on `||Xt - X||`. `None` when infeasible.
    pub bound: Option<f64>,
    pub feasible: bool,
}

/// Bounds `||Xt - X||` by `theta ||R(Xt)||`.
///
/// An infeasible certificate is not an error: the report carries the
/// diagnostic values with `feasible == false`.
pub fn backward_bound(instance: &EquationInstance, xt: &HermitianMatrix) -> Result<BackwardErrorReport> {
    let (_, residual_norm) = residual(instance, xt)?;
    let xinv = inverse(xt.as_matrix())?;
    let sigma: f64 = instance
        .a()
        .iter()
        .map(|a| spectral_norm(&(&xinv * a)).powi(2))
        .sum();
    let (lambda_min, _) = eig_extremes(xt)?;
    let threshold = if sigma < 1.0 {
        (1.0 - sigma).powi(2) / (1.0 + sigma + 2.0 * sigma.sqrt()) * lambda_min
    } else {
        0.0
    };
    let feasible = sigma < 1.0 && residual_norm < threshold;
    let (theta, bound) = if feasible {
        let p = (1.0 - sigma) * lambda_min + residual_norm;
        let disc = p * p - 4.0 * lambda_min * residual_norm;
        let theta = 2.0 * lambda_min / (p + disc.sqrt());
        (Some(theta), Some(theta * residual_norm))
    } else {
        (None, None)
    };
    Ok(BackwardErrorReport {
        sigma,
        residual_norm,
        lambda_min,
        threshold,
        theta,
        bound,
        feasible,
    })
}
