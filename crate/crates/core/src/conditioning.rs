//! Condition numbers of the solution with respect to `(A_1..A_m, Q)`.
//!
//! The condition number is the spectral norm of a real block row
//! `(rho S, eta_1 U_1, ..., eta_m U_m)` divided by `xi`. For complex data the
//! blocks act on stacked real and imaginary parts, for real data on the real
//! entries only.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{par_map, Execution};
use crate::linalg::{
    frobenius_norm, inverse, kron, vec_permutation, ComplexMatrix, RealBlockMatrix, C64,
};
use crate::operators::OperatorBundle;
use crate::solver::{solve_general, EquationData, GeneralInstance, SolveSettings, StartPolicy};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Absolute,
    #[default]
    Relative,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    #[default]
    Complex,
    Real,
}

/// Weights `xi` on the solution, `rho` on `Q` and `eta_i` on each `A_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub xi: f64,
    pub rho: f64,
    pub etas: Vec<f64>,
}

impl Weights {
    pub fn for_mode<D: EquationData + ?Sized>(data: &D, x: &ComplexMatrix, mode: Mode) -> Self {
        match mode {
            Mode::Absolute => Self {
                xi: 1.0,
                rho: 1.0,
                etas: vec![1.0; data.count()],
            },
            Mode::Relative => Self {
                xi: frobenius_norm(x),
                rho: frobenius_norm(data.constant()),
                etas: data.coefficients().iter().map(frobenius_norm).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub mode: Mode,
    pub case: Case,
    pub value: f64,
    pub xi: f64,
    pub rho: f64,
    pub etas: Vec<f64>,
    /// The block row whose spectral norm is `value * xi`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub assembled: Option<RealBlockMatrix>,
}

impl ConditionReport {
    /// Drops the assembled block row, which is large.
    pub fn without_blocks(mut self) -> Self {
        self.assembled = None;
        self
    }
}

fn finish(mode: Mode, case: Case, w: Weights, assembled: DMatrix<f64>) -> Result<ConditionReport> {
    let assembled = RealBlockMatrix::new(assembled)?;
    let value = assembled.spectral_norm() / w.xi;
    Ok(ConditionReport {
        mode,
        case,
        value,
        xi: w.xi,
        rho: w.rho,
        etas: w.etas,
        assembled: Some(assembled),
    })
}

/// Condition number for complex data, from the operator bundle at `x`.
pub fn cond_complex<D: EquationData + ?Sized>(
    data: &D,
    x: &ComplexMatrix,
    bundle: &OperatorBundle,
    mode: Mode,
) -> Result<ConditionReport> {
    cond_complex_weighted(data, bundle, Weights::for_mode(data, x, mode), mode)
}

/// [`cond_complex`] with explicit weights. `mode` only labels the report.
pub fn cond_complex_weighted<D: EquationData + ?Sized>(
    data: &D,
    bundle: &OperatorBundle,
    w: Weights,
    mode: Mode,
) -> Result<ConditionReport> {
    let n = bundle.n;
    if data.order() != n || data.count() != bundle.b.len() || w.etas.len() != data.count() {
        return Err(Error::DimensionMismatch(
            "operator bundle or weights do not match the equation".into(),
        ));
    }
    let nn = n * n;
    let eye = ComplexMatrix::identity(n);
    let perm = ComplexMatrix::from_real(vec_permutation(n).as_dmatrix())?;
    let mut out = DMatrix::<f64>::zeros(2 * nn, 2 * nn * (data.count() + 1));

    let s = bundle.l_inv.real_part();
    let sg = bundle.l_inv.imag_part();
    place(&mut out, 0, 0, &(&s * w.rho));
    place(&mut out, 0, nn, &(&sg * -w.rho));
    place(&mut out, nn, 0, &(&sg * w.rho));
    place(&mut out, nn, nn, &(&s * w.rho));

    for (i, bi) in bundle.b.iter().enumerate() {
        let first = &bundle.l_inv * &kron(&eye, &bi.adjoint());
        let second = &bundle.l_inv * &(&kron(&bi.transpose(), &eye) * &perm);
        let (u1, o1) = (first.real_part(), first.imag_part());
        let (u2, o2) = (second.real_part(), second.imag_part());
        let eta = w.etas[i];
        let col = 2 * nn * (i + 1);
        place(&mut out, 0, col, &((&u1 + &u2) * eta));
        place(&mut out, 0, col + nn, &((&o2 - &o1) * eta));
        place(&mut out, nn, col, &((&o1 + &o2) * eta));
        place(&mut out, nn, col + nn, &((&u1 - &u2) * eta));
    }
    finish(mode, Case::Complex, w, out)
}

/// Condition number for real data at the real solution `x`.
pub fn cond_real<D: EquationData + ?Sized>(data: &D, x: &ComplexMatrix, mode: Mode) -> Result<ConditionReport> {
    cond_real_weighted(data, x, Weights::for_mode(data, x, mode), mode)
}

/// [`cond_real`] with explicit weights. `mode` only labels the report.
pub fn cond_real_weighted<D: EquationData + ?Sized>(
    data: &D,
    x: &ComplexMatrix,
    w: Weights,
    mode: Mode,
) -> Result<ConditionReport> {
    let n = data.order();
    if w.etas.len() != data.count() {
        return Err(Error::DimensionMismatch("one weight per coefficient expected".into()));
    }
    if x.rows() != n || x.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "solution is {}x{}, equation has order {n}",
            x.rows(),
            x.cols()
        )));
    }
    let max_imag = data
        .coefficients()
        .iter()
        .chain(std::iter::once(data.constant()))
        .chain(std::iter::once(x))
        .map(|m| m.max_imag())
        .fold(0.0, f64::max);
    if max_imag > 0.0 {
        return Err(Error::NotReal { max_imag });
    }
    let nn = n * n;
    let xinv = inverse(x)?.real_part();
    let eye = DMatrix::<f64>::identity(n, n);
    let perm = vec_permutation(n).as_dmatrix().clone();
    let cs: Vec<DMatrix<f64>> = data
        .coefficients()
        .iter()
        .map(|a| a.real_part().transpose() * &xinv)
        .collect();
    let l = cs
        .iter()
        .fold(DMatrix::<f64>::identity(nn, nn), |acc, c| acc + c.kronecker(c));
    let sigma_min = l.singular_values().min();
    let sr = l
        .try_inverse()
        .filter(|_| sigma_min > 0.0)
        .ok_or(Error::SingularOperator { sigma_min })?;

    let mut out = DMatrix::<f64>::zeros(nn, nn * (data.count() + 1));
    place(&mut out, 0, 0, &(&sr * w.rho));
    for (i, c) in cs.iter().enumerate() {
        let u = &sr * (eye.kronecker(c) + c.kronecker(&eye) * &perm);
        place(&mut out, 0, nn * (i + 1), &(u * w.etas[i]));
    }
    finish(mode, Case::Real, w, out)
}

fn place(out: &mut DMatrix<f64>, row: usize, col: usize, block: &DMatrix<f64>) {
    out.view_mut((row, col), block.shape()).copy_from(block);
}

/// Settings for the finite-difference estimate of the condition number.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSettings {
    pub mode: Mode,
    pub case: Case,
    pub step: f64,
    pub trials: usize,
    pub seed: u64,
    pub solve_tol: f64,
    pub exec: Execution,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            mode: Mode::Relative,
            case: Case::Complex,
            step: 1e-6,
            trials: 50,
            seed: 0,
            solve_tol: 1e-13,
            exec: Execution::default(),
        }
    }
}

/// A random direction `(E_1..E_m, H)` of unit Frobenius norm with `H`
/// Hermitian (real symmetric in the real case).
pub fn random_direction(rng: &mut impl Rng, n: usize, m: usize, case: Case) -> (Vec<ComplexMatrix>, ComplexMatrix) {
    let draw = |rng: &mut dyn rand::RngCore| -> ComplexMatrix {
        let entries: Vec<C64> = (0..n * n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = match case {
                    Case::Complex => rng.sample(StandardNormal),
                    Case::Real => 0.0,
                };
                C64::new(re, im)
            })
            .collect();
        ComplexMatrix::wrap(DMatrix::from_row_slice(n, n, &entries))
    };
    let e: Vec<ComplexMatrix> = (0..m).map(|_| draw(rng)).collect();
    let g = draw(rng);
    let h = (&g + &g.adjoint()).scale(0.5);
    let total = (e.iter().map(|m| frobenius_norm(m).powi(2)).sum::<f64>() + frobenius_norm(&h).powi(2)).sqrt();
    (
        e.iter().map(|m| m.scale(1.0 / total)).collect(),
        h.scale(1.0 / total),
    )
}

/// Monte-Carlo lower estimate of the condition number by perturbed solves.
///
/// For each random direction the ratio `||X(d) - X||_F / (xi d)` is taken at
/// `d = step` and `d = step / 2` and extrapolated to `d = 0`. The estimate is
/// the largest extrapolated ratio. Trials use independent ChaCha streams of
/// `seed` and run under `settings.exec`.
pub fn cond_fd_oracle<D: EquationData + Sync + ?Sized>(
    data: &D,
    x: &ComplexMatrix,
    settings: &OracleSettings,
) -> Result<f64> {
    if !(settings.step > 0.0) || settings.trials == 0 {
        return Err(Error::InvalidSettings(
            "oracle needs a positive step and at least one trial".into(),
        ));
    }
    let w = Weights::for_mode(data, x, settings.mode);
    let (n, m) = (data.order(), data.count());
    let solve_settings = SolveSettings::default()
        .with_tol(settings.solve_tol)
        .with_start(StartPolicy::Explicit(x.clone()));

    let ratio = |e: &[ComplexMatrix], h: &ComplexMatrix, d: f64| -> Result<f64> {
        let a: Vec<ComplexMatrix> = data
            .coefficients()
            .iter()
            .zip(e)
            .zip(&w.etas)
            .map(|((a, ei), eta)| a + &ei.scale(d * eta))
            .collect();
        let q = data.constant() + &h.scale(d * w.rho);
        let report = solve_general(&GeneralInstance::new(a, q)?, &solve_settings)?;
        if !report.converged {
            return Err(Error::MaxIterationsExceeded {
                max_iter: solve_settings.max_iter,
                last_change: report.residual_norm,
            });
        }
        Ok(frobenius_norm(&(&report.x - x)) / (w.xi * d))
    };

    let trial = |t: usize| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(t as u64);
        let (e, h) = random_direction(&mut rng, n, m, settings.case);
        let r1 = ratio(&e, &h, settings.step)?;
        let r2 = ratio(&e, &h, 0.5 * settings.step)?;
        Ok(2.0 * r2 - r1)
    };

    par_map(settings.exec, settings.trials, trial)
        .into_iter()
        .try_fold(0.0f64, |best, r| r.map(|v| best.max(v)))
}
