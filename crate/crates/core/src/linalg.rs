//! Dense complex matrix primitives.
//!
//! Everything downstream works on three value types:
//!
//! - [`ComplexMatrix`]: a general finite complex matrix.
//! - [`HermitianMatrix`]: a square complex matrix whose conjugate symmetry is
//!   structural. Constructors keep the upper triangle and mirror it, so
//!   `h[(j, k)] == conj(h[(k, j)])` holds bit for bit.
//! - [`RealBlockMatrix`]: a finite real matrix, used for the real/imaginary
//!   split representations of the condition number.
//!
//! `vec` is column-major throughout: `vec(A) = (a_1^T, ..., a_n^T)^T` where
//! `a_k` is the k-th column. The identity `vec(A E B) = (B^T (x) A) vec(E)`
//! relies on this and every Kronecker representation in the crate assumes it.

use std::fmt;
use std::ops::{Add, Deref, Index, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const EIGEN_MAX_ITER: usize = 10_000;

/// A finite dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    /// Builds a real matrix from nested rows. Ragged input is rejected.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {ncols}",
                    row.len()
                )));
            }
            entries.extend(row.iter().map(|&v| C64::new(v, 0.0)));
        }
        Self::from_row_major(nrows, ncols, &entries)
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_dmatrix(m.map(|v| C64::new(v, 0.0)))
    }

    /// Internal constructor for results of arithmetic on finite inputs.
    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.im)
    }

    /// Largest absolute imaginary part over all entries.
    pub fn max_imag(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Largest |m_jk - conj(m_kj)|.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.rows().min(self.cols());
        let mut dev = 0.0f64;
        for j in 0..n {
            for k in j..n {
                dev = dev.max((self.0[(j, k)] - self.0[(k, j)].conj()).norm());
            }
        }
        dev
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let real = self.max_imag() == 0.0;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                if j > 0 {
                    write!(f, "  ")?;
                }
                if real {
                    write!(f, "{:>10.4}", z.re)?;
                } else {
                    write!(f, "{:>10.4}{:+.4}i", z.re, z.im)?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// A Hermitian matrix. Only the upper triangle of the source is kept; the
/// lower triangle is its mirrored conjugate and the diagonal is real.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Keeps the upper triangle of `m` and mirrors it.
    pub fn from_upper(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        let src = m.as_dmatrix();
        let out = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => src[(i, j)],
            std::cmp::Ordering::Equal => C64::new(src[(i, i)].re, 0.0),
            std::cmp::Ordering::Greater => src[(j, i)].conj(),
        });
        Ok(Self(ComplexMatrix(out)))
    }

    /// Accepts `m` if it is Hermitian to within `tol` (absolute, entrywise).
    pub fn try_from_matrix(m: &ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let dev = m.hermitian_deviation();
        if dev > tol {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        Self::from_upper(m)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(ComplexMatrix(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self(ComplexMatrix::identity(n).scale(c))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn order(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        hermitian_part(&(&self.0 + &other.0)).expect("square")
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        hermitian_part(&(&self.0 - &other.0)).expect("square")
    }

    pub fn scale(&self, factor: f64) -> HermitianMatrix {
        HermitianMatrix(self.0.scale(factor))
    }

    /// `self + c I`.
    pub fn shift(&self, c: f64) -> HermitianMatrix {
        let mut m = self.0.clone().into_dmatrix();
        for i in 0..m.nrows() {
            m[(i, i)] += C64::new(c, 0.0);
        }
        HermitianMatrix(ComplexMatrix(m))
    }
}

impl Deref for HermitianMatrix {
    type Target = ComplexMatrix;
    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

impl fmt::Display for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A finite dense real matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealBlockMatrix(DMatrix<f64>);

impl RealBlockMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
            let rows = m.nrows().max(1);
            return Err(Error::NonFinite {
                row: pos % rows,
                col: pos / rows,
            });
        }
        Ok(Self(m))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn spectral_norm(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.clone().singular_values().max()
    }
}

impl Index<(usize, usize)> for RealBlockMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.as_dmatrix().is_empty() {
        return 0.0;
    }
    m.as_dmatrix().clone().singular_values().max()
}

/// Smallest singular value.
pub fn smallest_singular_value(m: &ComplexMatrix) -> f64 {
    if m.as_dmatrix().is_empty() {
        return 0.0;
    }
    m.as_dmatrix().clone().singular_values().min()
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.as_dmatrix().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn eig_extremes(h: &HermitianMatrix) -> Result<(f64, f64)> {
    let vals = eigenvalues(h)?;
    Ok((vals.min(), vals.max()))
}

pub fn eigenvalues(h: &HermitianMatrix) -> Result<DVector<f64>> {
    let m = h.as_dmatrix().clone();
    SymmetricEigen::try_new(m, f64::EPSILON, EIGEN_MAX_ITER)
        .map(|e| e.eigenvalues)
        .ok_or(Error::EigenNoConvergence)
}

/// Default positive-definiteness threshold `n * eps * lambda_max`.
pub fn default_pd_tol(order: usize, lambda_max: f64) -> f64 {
    order as f64 * f64::EPSILON * lambda_max.abs()
}

/// `lambda_min(h) > tol`. A failed eigensolve counts as not positive definite.
pub fn is_positive_definite(h: &HermitianMatrix, tol: f64) -> bool {
    match eig_extremes(h) {
        Ok((lo, _)) => lo > tol,
        Err(_) => false,
    }
}

/// Positive definiteness with the default tolerance.
pub fn is_positive_definite_default(h: &HermitianMatrix) -> bool {
    match eig_extremes(h) {
        Ok((lo, hi)) => lo > default_pd_tol(h.order(), hi),
        Err(_) => false,
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.as_dmatrix().kronecker(b.as_dmatrix()))
}

/// Stacks the columns of `m` top to bottom.
pub fn vec(m: &ComplexMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_dmatrix().as_slice())
}

/// Inverse of [`vec`] for an `rows x cols` target.
pub fn unvec(v: &DVector<C64>, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} cannot be reshaped to {rows}x{cols}",
            v.len()
        )));
    }
    ComplexMatrix::from_dmatrix(DMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// The `n^2 x n^2` permutation with `vec(E^T) = P vec(E)`.
pub fn vec_permutation(n: usize) -> RealBlockMatrix {
    let nn = n * n;
    let mut p = DMatrix::zeros(nn, nn);
    // entry (i, j) of E sits at j*n + i in vec(E) and at i*n + j in vec(E^T)
    for i in 0..n {
        for j in 0..n {
            p[(i * n + j, j * n + i)] = 1.0;
        }
    }
    RealBlockMatrix(p)
}

/// `(M + M^*) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> Result<HermitianMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let sym = (m.as_dmatrix() + m.as_dmatrix().adjoint()).map(|z| z * 0.5);
    HermitianMatrix::from_upper(&ComplexMatrix(sym))
}

/// Matrix inverse via LU with partial pivoting.
///
/// Fails with [`Error::Singular`] when the reciprocal 1-norm condition
/// estimate drops below machine epsilon.
pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let a = m.as_dmatrix();
    match a.clone().lu().try_inverse() {
        Some(inv) => {
            let rcond = 1.0 / (one_norm(a) * one_norm(&inv));
            if rcond.is_finite() && rcond >= f64::EPSILON {
                Ok(ComplexMatrix(inv))
            } else {
                Err(Error::Singular {
                    rcond: if rcond.is_finite() { rcond } else { 0.0 },
                })
            }
        }
        None => {
            let sv = a.clone().singular_values();
            let rcond = if sv.max() > 0.0 { sv.min() / sv.max() } else { 0.0 };
            Err(Error::Singular { rcond })
        }
    }
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Real `n x n` tridiagonal Toeplitz matrix with `diag` on the diagonal and
/// `off` on both off-diagonals.
pub fn tridiagonal(n: usize, diag: f64, off: f64) -> ComplexMatrix {
    ComplexMatrix(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(diag, 0.0)
        } else if i.abs_diff(j) == 1 {
            C64::new(off, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}
