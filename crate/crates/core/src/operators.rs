//! Matrix representations of the sensitivity operators at a solution.
//!
//! With `B_i = X^{-1} A_i` the linearized equation reads
//! `L(dX) = dQ + sum_i (B_i^* dA_i + dA_i^* B_i)` where `L W = W + sum_i B_i^* W B_i`.
//! Under column-major `vec`:
//!
//! ```text
//! L   = I (x) I + sum_i B_i^T (x) B_i^*
//! P_i = L^{-1} (I (x) B_i^* + (B_i^T (x) I) Pi)
//! ```
//!
//! where `Pi` is the vec-permutation matrix. Operator norms are taken as the
//! extreme singular values of these representations, i.e. norms induced by
//! the Frobenius norm on matrix arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    inverse, kron, smallest_singular_value, spectral_norm, vec_permutation, ComplexMatrix,
    HermitianMatrix,
};
use crate::solver::EquationData;

/// Which matrix norm induces the reported operator norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorNorm {
    FrobeniusInduced,
}

#[derive(Clone, Debug)]
pub struct OperatorBundle {
    pub n: usize,
    /// `B_i = X^{-1} A_i`
    pub b: Vec<ComplexMatrix>,
    pub l_rep: ComplexMatrix,
    pub l_inv: ComplexMatrix,
    pub p_reps: Vec<ComplexMatrix>,
    /// Surrogate for `||L^{-1}||^{-1}`: smallest singular value of `l_rep`.
    pub l: f64,
    /// Surrogates for `||P_i||`: largest singular value of each `p_reps[i]`.
    pub n_ops: Vec<f64>,
    /// `||B_i||`
    pub theta_is: Vec<f64>,
    /// `sum ||B_i||^2`
    pub theta: f64,
    /// `||X^{-1}||`
    pub zeta: f64,
    pub norm: OperatorNorm,
}

/// Builds `L`, `P_i` and their norms at the solution `x`.
pub fn build_bundle<D: EquationData + ?Sized>(data: &D, x: &HermitianMatrix) -> Result<OperatorBundle> {
    build_bundle_general(data, x.as_matrix())
}

/// Same as [`build_bundle`] for a solution that need not be Hermitian.
pub fn build_bundle_general<D: EquationData + ?Sized>(
    data: &D,
    x: &ComplexMatrix,
) -> Result<OperatorBundle> {
    let n = data.order();
    if x.rows() != n || x.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "solution is {}x{}, equation has order {n}",
            x.rows(),
            x.cols()
        )));
    }
    let xinv = inverse(x)?;
    let b: Vec<ComplexMatrix> = data.coefficients().iter().map(|a| &xinv * a).collect();
    let eye = ComplexMatrix::identity(n);
    let l_rep = b.iter().fold(ComplexMatrix::identity(n * n), |acc, bi| {
        &acc + &kron(&bi.transpose(), &bi.adjoint())
    });
    let l = smallest_singular_value(&l_rep);
    let floor = (n * n) as f64 * f64::EPSILON * spectral_norm(&l_rep);
    if !(l > floor) {
        return Err(Error::SingularOperator { sigma_min: l });
    }
    let l_inv = inverse(&l_rep).map_err(|_| Error::SingularOperator { sigma_min: l })?;
    let perm = ComplexMatrix::from_real(vec_permutation(n).as_dmatrix())?;
    let p_reps: Vec<ComplexMatrix> = b
        .iter()
        .map(|bi| {
            let inner = &kron(&eye, &bi.adjoint()) + &(&kron(&bi.transpose(), &eye) * &perm);
            &l_inv * &inner
        })
        .collect();
    let n_ops = p_reps.iter().map(spectral_norm).collect();
    let theta_is: Vec<f64> = b.iter().map(spectral_norm).collect();
    let theta = theta_is.iter().map(|t| t * t).sum();
    Ok(OperatorBundle {
        n,
        b,
        l_rep,
        l_inv,
        p_reps,
        l,
        n_ops,
        theta_is,
        theta,
        zeta: spectral_norm(&xinv),
        norm: OperatorNorm::FrobeniusInduced,
    })
}

/// `W + sum_i B_i^* W B_i`, evaluated directly.
pub fn apply_l(bundle: &OperatorBundle, w: &ComplexMatrix) -> ComplexMatrix {
    bundle
        .b
        .iter()
        .fold(w.clone(), |acc, bi| &acc + &(&bi.adjoint() * &(w * bi)))
}
