#![allow(dead_code)]

use matfix_core::linalg::{hermitian_part, spectral_norm};
use matfix_core::{ComplexMatrix, EquationInstance, HermitianMatrix, C64};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn scalar(v: f64) -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[vec![v]]).unwrap()
}

pub fn gaussian(rng: &mut impl Rng, n: usize, complex: bool) -> ComplexMatrix {
    let entries: Vec<C64> = (0..n * n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
            C64::new(re, im)
        })
        .collect();
    ComplexMatrix::from_row_major(n, n, &entries).unwrap()
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize, complex: bool) -> HermitianMatrix {
    hermitian_part(&gaussian(rng, n, complex)).unwrap()
}

/// Random instance with `sum ||A_i||^2 <= contraction * lambda_min(Q)^2`,
/// which keeps the iteration well inside its convergence region.
pub fn random_instance(rng: &mut impl Rng, n: usize, m: usize, complex: bool, contraction: f64) -> EquationInstance {
    let g = gaussian(rng, n, complex);
    let q = &(&g * &g.adjoint()).scale(1.0 / n as f64) + &ComplexMatrix::identity(n);
    let q = hermitian_part(&q).unwrap();
    let qmin = matfix_core::linalg::eig_extremes(&q).unwrap().0;
    let raw: Vec<ComplexMatrix> = (0..m).map(|_| gaussian(rng, n, complex)).collect();
    let total: f64 = raw.iter().map(|a| spectral_norm(a).powi(2)).sum();
    let share: f64 = rng.random_range(0.05..1.0);
    let s = (share * contraction * qmin * qmin / total).sqrt();
    EquationInstance::from_hermitian(raw.iter().map(|a| a.scale(s)).collect(), q).unwrap()
}

/// `W + sum_i B_i^* W B_i` written out entry by entry.
pub fn l_direct(b: &[ComplexMatrix], w: &ComplexMatrix) -> ComplexMatrix {
    let n = w.rows();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = w[(r, c)];
            for bi in b {
                for p in 0..n {
                    for q in 0..n {
                        acc += bi[(p, r)].conj() * w[(p, q)] * bi[(q, c)];
                    }
                }
            }
            out[r * n + c] = acc;
        }
    }
    ComplexMatrix::from_row_major(n, n, &out).unwrap()
}

/// Agreement within half a unit in the third significant digit of `reference`.
pub fn three_digits(value: f64, reference: f64) -> bool {
    let e = reference.abs().log10().floor();
    (value - reference).abs() <= 0.5 * 10f64.powf(e - 2.0)
}

pub fn rel_diff(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}
