//! Fixed-point solver for `X - sum_i A_i^* X^{-1} A_i = Q`.
//!
//! The iteration `X_k = Q + sum_i A_i^* X_{k-1}^{-1} A_i` converges to the
//! unique positive definite solution from any positive definite start.
//! Convergence is declared on the spectral norm of the equation residual.

use crate::error::{Error, Result};
use crate::linalg::{
    default_pd_tol, eig_extremes, hermitian_part, inverse, spectral_norm, ComplexMatrix,
    HermitianMatrix,
};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Relative entrywise slack when accepting `Q` as Hermitian.
const HERMITIAN_REL_TOL: f64 = 64.0 * f64::EPSILON;

/// Read access to the data of an equation, Hermitian or not.
pub trait EquationData {
    fn coefficients(&self) -> &[ComplexMatrix];
    fn constant(&self) -> &ComplexMatrix;

    fn order(&self) -> usize {
        self.constant().rows()
    }

    fn count(&self) -> usize {
        self.coefficients().len()
    }
}

/// Coefficients `A_1..A_m` and a Hermitian positive definite `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationInstance {
    a: Vec<ComplexMatrix>,
    q: HermitianMatrix,
}

impl EquationInstance {
    /// Validates and builds an instance. All violations are reported at once.
    pub fn new(a: Vec<ComplexMatrix>, q: ComplexMatrix) -> Result<Self> {
        let mut violations = shape_violations(&a, &q);
        let hq = if q.is_square() {
            let tol = HERMITIAN_REL_TOL * q.max_abs().max(1.0);
            match HermitianMatrix::try_from_matrix(&q, tol) {
                Ok(h) => Some(h),
                Err(e) => {
                    violations.push(e);
                    None
                }
            }
        } else {
            None
        };
        if let Some(h) = &hq {
            if let Err(e) = check_positive_definite(h) {
                violations.push(e);
            }
        }
        match (violations.is_empty(), hq) {
            (true, Some(q)) => Ok(Self { a, q }),
            _ => Err(Error::Invalid(violations)),
        }
    }

    pub fn from_hermitian(a: Vec<ComplexMatrix>, q: HermitianMatrix) -> Result<Self> {
        let inst = Self { a, q };
        validate(&inst)?;
        Ok(inst)
    }

    pub fn a(&self) -> &[ComplexMatrix] {
        &self.a
    }

    pub fn q(&self) -> &HermitianMatrix {
        &self.q
    }

    pub fn n(&self) -> usize {
        self.q.order()
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    /// Same data with perturbed coefficients and constant term.
    pub fn perturbed(&self, da: &[ComplexMatrix], dq: &HermitianMatrix) -> Result<Self> {
        if da.len() != self.a.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient perturbations for {} coefficients",
                da.len(),
                self.a.len()
            )));
        }
        let a = self.a.iter().zip(da).map(|(a, d)| a + d).collect();
        Self::from_hermitian(a, self.q.add(dq))
    }
}

impl EquationData for EquationInstance {
    fn coefficients(&self) -> &[ComplexMatrix] {
        &self.a
    }

    fn constant(&self) -> &ComplexMatrix {
        self.q.as_matrix()
    }
}

/// Equation data with no symmetry requirement on `Q`.
///
/// Used to run the iteration on data whose constant term is not Hermitian.
/// No positive-definiteness checks apply to it.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralInstance {
    a: Vec<ComplexMatrix>,
    q: ComplexMatrix,
}

impl GeneralInstance {
    pub fn new(a: Vec<ComplexMatrix>, q: ComplexMatrix) -> Result<Self> {
        let violations = shape_violations(&a, &q);
        if violations.is_empty() {
            Ok(Self { a, q })
        } else {
            Err(Error::Invalid(violations))
        }
    }

    pub fn a(&self) -> &[ComplexMatrix] {
        &self.a
    }

    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }
}

impl EquationData for GeneralInstance {
    fn coefficients(&self) -> &[ComplexMatrix] {
        &self.a
    }

    fn constant(&self) -> &ComplexMatrix {
        &self.q
    }
}

impl From<&EquationInstance> for GeneralInstance {
    fn from(inst: &EquationInstance) -> Self {
        Self {
            a: inst.a.clone(),
            q: inst.q.as_matrix().clone(),
        }
    }
}

fn shape_violations(a: &[ComplexMatrix], q: &ComplexMatrix) -> Vec<Error> {
    let mut out = Vec::new();
    if a.is_empty() {
        out.push(Error::DimensionMismatch("at least one coefficient matrix is required".into()));
    }
    if !q.is_square() {
        out.push(Error::NotSquare {
            rows: q.rows(),
            cols: q.cols(),
        });
    }
    for (i, ai) in a.iter().enumerate() {
        if ai.rows() != q.rows() || ai.cols() != q.rows() {
            out.push(Error::DimensionMismatch(format!(
                "A[{i}] is {}x{} but Q has order {}",
                ai.rows(),
                ai.cols(),
                q.rows()
            )));
        }
    }
    out
}

fn check_positive_definite(h: &HermitianMatrix) -> Result<()> {
    let (lo, hi) = eig_extremes(h)?;
    let tol = default_pd_tol(h.order(), hi);
    if lo > tol {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite { lambda_min: lo, tol })
    }
}

/// Re-checks every instance invariant, reporting all violations.
pub fn validate(instance: &EquationInstance) -> Result<()> {
    let mut violations = shape_violations(&instance.a, instance.q.as_matrix());
    if let Err(e) = check_positive_definite(&instance.q) {
        violations.push(e);
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(violations))
    }
}

/// Starting matrix of the iteration.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum StartPolicy {
    #[default]
    Q,
    ScaledIdentity(f64),
    Explicit(ComplexMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveSettings {
    pub x0: StartPolicy,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            x0: StartPolicy::Q,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl SolveSettings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_start(mut self, x0: StartPolicy) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidSettings(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidSettings("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a fixed-point solve. `x` is the converged iterate, or the
/// iterate with the smallest residual when `converged` is false.
#[derive(Clone, Debug)]
pub struct SolveReport<M = HermitianMatrix> {
    pub x: M,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

impl<M> SolveReport<M> {
    pub fn solution(&self) -> &M {
        &self.x
    }

    pub fn into_solution(self) -> M {
        self.x
    }
}

/// `F(Y) = Q + sum_i A_i^* Y^{-1} A_i`.
pub fn fixed_point_map(instance: &EquationInstance, y: &HermitianMatrix) -> Result<HermitianMatrix> {
    let yinv = inverse(y.as_matrix())?;
    hermitian_part(&apply_map(instance, &yinv))
}

/// `Q + sum_i A_i^* Yinv A_i` for a precomputed inverse.
fn apply_map<D: EquationData + ?Sized>(data: &D, yinv: &ComplexMatrix) -> ComplexMatrix {
    data.coefficients()
        .iter()
        .fold(data.constant().clone(), |acc, a| &acc + &(&a.adjoint() * &(yinv * a)))
}

struct LoopOutcome {
    x: ComplexMatrix,
    iterations: usize,
    residual_norm: f64,
    converged: bool,
    history: Vec<f64>,
}

fn run_iteration<D: EquationData + ?Sized>(
    data: &D,
    x0: ComplexMatrix,
    settings: &SolveSettings,
    hermitian: bool,
) -> Result<LoopOutcome> {
    let n = data.order();
    let mut xinv = inverse(&x0)?;
    let mut mapped = apply_map(data, &xinv);
    let mut history = Vec::new();
    let mut best: Option<(f64, ComplexMatrix)> = None;

    for k in 1..=settings.max_iter {
        let x = if hermitian {
            let h = hermitian_part(&mapped)?;
            let (lo, hi) = eig_extremes(&h)?;
            if lo <= default_pd_tol(n, hi) {
                return Err(Error::SingularIterate {
                    iteration: k,
                    lambda_min: lo,
                });
            }
            h.into_matrix()
        } else {
            mapped
        };
        xinv = match inverse(&x) {
            Ok(inv) => inv,
            Err(Error::Singular { .. }) => {
                return Err(Error::SingularIterate {
                    iteration: k,
                    lambda_min: f64::NAN,
                })
            }
            Err(e) => return Err(e),
        };
        // F(X_k) is both the residual's ingredient and the next iterate
        mapped = apply_map(data, &xinv);
        let r = spectral_norm(&(&mapped - &x));
        history.push(r);
        if r < settings.tol {
            return Ok(LoopOutcome {
                x,
                iterations: k,
                residual_norm: r,
                converged: true,
                history,
            });
        }
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, x));
        }
    }
    let (r, x) = best.expect("max_iter >= 1");
    Ok(LoopOutcome {
        x,
        iterations: settings.max_iter,
        residual_norm: r,
        converged: false,
        history,
    })
}

fn start_matrix(n: usize, q: &ComplexMatrix, policy: &StartPolicy) -> Result<ComplexMatrix> {
    match policy {
        StartPolicy::Q => Ok(q.clone()),
        StartPolicy::ScaledIdentity(c) => {
            if !(*c > 0.0) {
                return Err(Error::InvalidSettings(format!(
                    "identity scale must be positive, got {c}"
                )));
            }
            Ok(ComplexMatrix::identity(n).scale(*c))
        }
        StartPolicy::Explicit(m) => {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "start matrix is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
            Ok(m.clone())
        }
    }
}

/// Runs the fixed-point iteration to the residual tolerance.
///
/// Every iterate is re-symmetrized and checked for positive definiteness.
/// Hitting `max_iter` is not an error: the report comes back with
/// `converged == false` and the best iterate seen.
pub fn solve(instance: &EquationInstance, settings: &SolveSettings) -> Result<SolveReport> {
    settings.check()?;
    let n = instance.n();
    let x0 = start_matrix(n, instance.q.as_matrix(), &settings.x0)?;
    let x0 = HermitianMatrix::try_from_matrix(&x0, HERMITIAN_REL_TOL * x0.max_abs().max(1.0))?;
    check_positive_definite(&x0)?;
    let out = run_iteration(instance, x0.into_matrix(), settings, true)?;
    Ok(SolveReport {
        x: HermitianMatrix::from_upper(&out.x)?,
        iterations: out.iterations,
        residual_norm: out.residual_norm,
        converged: out.converged,
        history: out.history,
    })
}

/// The same iteration on raw matrices: no symmetrization, no definiteness
/// checks.
pub fn solve_general(
    instance: &GeneralInstance,
    settings: &SolveSettings,
) -> Result<SolveReport<ComplexMatrix>> {
    settings.check()?;
    let x0 = start_matrix(instance.order(), &instance.q, &settings.x0)?;
    let out = run_iteration(instance, x0, settings, false)?;
    Ok(SolveReport {
        x: out.x,
        iterations: out.iterations,
        residual_norm: out.residual_norm,
        converged: out.converged,
        history: out.history,
    })
}

/// `R(X) = Q + sum_i A_i^* X^{-1} A_i - X` and its spectral norm.
pub fn residual(instance: &EquationInstance, x: &HermitianMatrix) -> Result<(HermitianMatrix, f64)> {
    check_positive_definite(x)?;
    let xinv = inverse(x.as_matrix())?;
    let r = hermitian_part(&(&apply_map(instance, &xinv) - x.as_matrix()))?;
    let norm = spectral_norm(&r);
    Ok((r, norm))
}

/// Residual for raw (possibly non-Hermitian) data.
pub fn residual_general<D: EquationData + ?Sized>(
    data: &D,
    x: &ComplexMatrix,
) -> Result<(ComplexMatrix, f64)> {
    let xinv = inverse(x)?;
    let r = &apply_map(data, &xinv) - x;
    let norm = spectral_norm(&r);
    Ok((r, norm))
}

/// The first `steps` iterates `X_1..X_steps` starting from `x0`.
pub fn trajectory(
    instance: &EquationInstance,
    x0: &HermitianMatrix,
    steps: usize,
) -> Result<Vec<HermitianMatrix>> {
    let mut out = Vec::with_capacity(steps);
    let mut x = x0.clone();
    for _ in 0..steps {
        x = fixed_point_map(instance, &x)?;
        out.push(x.clone());
    }
    Ok(out)
}

/// Closed-form solution of the scalar equation `x - sum |a_i|^2 / x = q`.
pub fn scalar_root(q: f64, a: &[f64]) -> f64 {
    let s: f64 = a.iter().map(|v| v * v).sum();
    0.5 * (q + (q * q + 4.0 * s).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{tridiagonal, C64};

    fn scalar(v: f64) -> ComplexMatrix {
        ComplexMatrix::from_row_major(1, 1, &[C64::new(v, 0.0)]).unwrap()
    }

    #[test]
    fn zero_coefficient_converges_in_one_step() {
        let q = tridiagonal(3, 3.0, 1.0);
        let inst = EquationInstance::new(vec![ComplexMatrix::zeros(3, 3)], q.clone()).unwrap();
        let rep = solve(&inst, &SolveSettings::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.solution().as_matrix(), &q);
    }

    #[test]
    fn scalar_two_coefficients() {
        let inst = EquationInstance::new(vec![scalar(1.0), scalar(1.0)], scalar(1.0)).unwrap();
        let rep = solve(&inst, &SolveSettings::default().with_tol(1e-14)).unwrap();
        assert!(rep.converged);
        assert!((rep.solution()[(0, 0)].re - 2.0).abs() < 1e-13);
        assert_eq!(scalar_root(1.0, &[1.0, 1.0]), 2.0);
        let (_, r) = residual(&inst, &HermitianMatrix::from_real_diagonal(&[2.0])).unwrap();
        assert!(r < 1e-15);
    }

    #[test]
    fn validate_reports_every_violation() {
        let bad_q = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]).into_matrix();
        match EquationInstance::new(vec![ComplexMatrix::zeros(2, 2)], bad_q) {
            Err(Error::Invalid(v)) => {
                assert_eq!(v.len(), 1);
                assert!(matches!(v[0], Error::NotPositiveDefinite { .. }));
            }
            other => panic!("{other:?}"),
        }
        match EquationInstance::new(vec![ComplexMatrix::identity(4)], ComplexMatrix::identity(5)) {
            Err(Error::Invalid(v)) => assert!(matches!(v[0], Error::DimensionMismatch(_))),
            other => panic!("{other:?}"),
        }
        let nonherm = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        match EquationInstance::new(vec![ComplexMatrix::identity(3)], nonherm) {
            Err(Error::Invalid(v)) => {
                assert_eq!(v.len(), 2);
                assert!(matches!(v[1], Error::NotHermitian { .. }));
            }
            other => panic!("{other:?}"),
        }
        assert!(EquationInstance::new(vec![], ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn settings_are_checked() {
        let inst = EquationInstance::new(vec![scalar(1.0)], scalar(1.0)).unwrap();
        assert!(solve(&inst, &SolveSettings::default().with_tol(0.0)).is_err());
        assert!(solve(&inst, &SolveSettings::default().with_max_iter(0)).is_err());
        let neg = StartPolicy::Explicit(scalar(-1.0));
        assert!(matches!(
            solve(&inst, &SolveSettings::default().with_start(neg)),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn non_convergence_returns_best_iterate() {
        let inst = EquationInstance::new(vec![scalar(3.0)], scalar(1.0)).unwrap();
        let rep = solve(&inst, &SolveSettings::default().with_max_iter(3).with_tol(1e-15)).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
        assert_eq!(rep.history.len(), 3);
        let best = rep.history.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(rep.residual_norm, best);
    }

    #[test]
    fn general_mode_matches_hermitian_mode_on_hermitian_data() {
        let q = tridiagonal(4, 3.0, 1.0);
        let a = vec![tridiagonal(4, 0.5, 0.2), tridiagonal(4, 0.1, -0.3)];
        let inst = EquationInstance::new(a.clone(), q.clone()).unwrap();
        let gen = GeneralInstance::new(a, q).unwrap();
        let s = SolveSettings::default().with_tol(1e-13);
        let h = solve(&inst, &s).unwrap();
        let g = solve_general(&gen, &s).unwrap();
        let d = spectral_norm(&(h.solution().as_matrix() - g.solution()));
        assert!(d < 1e-12);
        assert_eq!(h.iterations, g.iterations);
    }
}
