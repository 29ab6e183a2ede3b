//! The four worked examples on the 5x5 tridiagonal test matrix, with their
//! published reference values.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::backward::backward_bound;
use crate::bounds::{scalar_bounds, ScalarBounds, SCALAR_MAX_ITER, SCALAR_TOL};
use crate::conditioning::{cond_real, Mode};
use crate::error::Result;
use crate::exec::{par_map, Execution};
use crate::linalg::{
    hermitian_part, spectral_norm, tridiagonal, ComplexMatrix, HermitianMatrix,
};
use crate::operators::build_bundle;
use crate::perturbation::{feasibility_table, xi1, xi2, xi3, FeasibilityTable, PerturbationSpec};
use crate::solver::{
    solve, solve_general, trajectory, EquationInstance, GeneralInstance, SolveSettings,
    StartPolicy,
};

const N: usize = 5;
/// Solve tolerance for reference solutions.
pub const REFERENCE_TOL: f64 = 1e-13;
pub const ENSEMBLE_RUNS: usize = 20;

#[derive(Clone, Debug, Deserialize)]
pub struct Reference {
    pub example1: Reference1,
    pub example2: Reference2,
    pub example3: Reference3,
    pub example4: Reference4,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Reference1 {
    pub beta: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub residual: f64,
    pub x: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Reference2 {
    pub j: Vec<i32>,
    pub con1: Vec<f64>,
    pub con2: Vec<f64>,
    pub con3: Vec<f64>,
    pub con4: Vec<f64>,
    pub con5: Vec<f64>,
    pub con6: Vec<f64>,
    pub true_error: Vec<f64>,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub nu_star: Vec<f64>,
}

impl Reference2 {
    pub fn column(&self, j: i32) -> Option<usize> {
        self.j.iter().position(|&v| v == j)
    }

    /// `con1..con6` at column `col`.
    pub fn conditions(&self, col: usize) -> [f64; 6] {
        [
            self.con1[col],
            self.con2[col],
            self.con3[col],
            self.con4[col],
            self.con5[col],
            self.con6[col],
        ]
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct Reference3 {
    pub k: Vec<usize>,
    pub true_error: Vec<f64>,
    pub bound: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Reference4 {
    pub k: Vec<i32>,
    pub c_rel: Vec<f64>,
}

/// Reference values shipped in `fixtures/reference.toml`.
pub fn reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        toml::from_str(include_str!("../fixtures/reference.toml")).expect("reference fixture parses")
    })
}

/// The tridiagonal matrix with 2 on the diagonal and 1 off it.
pub fn base_matrix() -> ComplexMatrix {
    tridiagonal(N, 2.0, 1.0)
}

fn scaled_base(c: f64) -> ComplexMatrix {
    let a = base_matrix();
    let s = c / spectral_norm(&a);
    a.scale(s)
}

fn pair(c1: f64, c2: f64) -> Vec<ComplexMatrix> {
    vec![scaled_base(c1), scaled_base(c2)]
}

/// `A_k = (1/(k+2) + 0.02) A / ||A||`, `Q = I`.
pub fn example1() -> EquationInstance {
    EquationInstance::new(pair(1.0 / 3.0 + 2e-2, 1.0 / 4.0 + 2e-2), ComplexMatrix::identity(N))
        .expect("valid instance")
}

fn example23_coefficients() -> Vec<ComplexMatrix> {
    pair(1.0 / 3.0 + 2e-2, 1.0 / 6.0 + 3e-2)
}

/// Coefficients of the perturbation study, `Q = I`.
pub fn example2() -> EquationInstance {
    EquationInstance::new(example23_coefficients(), ComplexMatrix::identity(N)).expect("valid instance")
}

/// Same coefficients with `Q` equal to the tridiagonal matrix.
pub fn example3() -> EquationInstance {
    EquationInstance::new(example23_coefficients(), base_matrix()).expect("valid instance")
}

/// The nonsymmetric constant term of the conditioning study, as printed.
pub fn example4_q() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        vec![2.0, 1.0, 0.0, 9.0, 0.0],
        vec![1.0, 2.0, 1.0, 0.0, 8.0],
        vec![5.0, 1.0, 2.0, 1.0, 6.0],
        vec![9.0, 0.0, 1.0, 2.0, 1.0],
        vec![0.0, 2.0, 3.0, 1.0, 2.0],
    ])
    .expect("finite")
}

/// `A_j = (1/(j+2) + 2 * 10^-k) A / ||A||` with the printed `Q`.
pub fn example4(k: i32) -> GeneralInstance {
    let t = 2.0 * 10f64.powi(-k);
    GeneralInstance::new(pair(1.0 / 3.0 + t, 1.0 / 4.0 + t), example4_q()).expect("square data")
}

/// `dA_1 = 10^-j D / ||D||`, `dA_2 = 3 * 10^(-j-1) D / ||D||`, `dQ = 0`.
pub fn example2_delta(j: i32, direction: &ComplexMatrix) -> PerturbationSpec {
    let unit = direction.scale(1.0 / spectral_norm(direction));
    PerturbationSpec::new(
        vec![unit.scale(10f64.powi(-j)), unit.scale(3.0 * 10f64.powi(-j - 1))],
        HermitianMatrix::zeros(N),
    )
}

/// `C^T + C` with `C` standard normal from the ChaCha stream `run` of `seed`.
pub fn random_symmetric_direction(seed: u64, run: usize) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    let c: Vec<Vec<f64>> = (0..N)
        .map(|_| (0..N).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let c = ComplexMatrix::from_real_rows(&c).expect("finite");
    &c + &c.transpose()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example1Report {
    pub beta: f64,
    pub alpha: f64,
    pub scalar_iterations: usize,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    /// Real part of the computed solution, row by row.
    pub x: Vec<Vec<f64>>,
    /// Largest entrywise distance to the printed solution.
    pub max_deviation: f64,
}

/// Scalar bounds and a solve from `1.1 I` at tolerance `1e-10`.
pub fn run_example1() -> Result<Example1Report> {
    let inst = example1();
    let sb = scalar_bounds(&inst, SCALAR_TOL, SCALAR_MAX_ITER)?;
    let rep = solve(&inst, &SolveSettings::default().with_start(StartPolicy::ScaledIdentity(1.1)))?;
    let x: Vec<Vec<f64>> = (0..N).map(|r| (0..N).map(|c| rep.x[(r, c)].re).collect()).collect();
    let printed = &reference().example1.x;
    let max_deviation = x
        .iter()
        .flatten()
        .zip(printed.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Example1Report {
        beta: sb.beta,
        alpha: sb.alpha,
        scalar_iterations: sb.iterations,
        iterations: rep.iterations,
        residual_norm: rep.residual_norm,
        converged: rep.converged,
        x,
        max_deviation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example2Report {
    pub j: i32,
    pub conditions: FeasibilityTable,
    pub xi1: f64,
    pub xi2: f64,
    /// Absolute `xi3`.
    pub xi3: f64,
    /// `xi3 / ||X||`.
    pub nu_star: f64,
    /// Geometric mean of `||X~ - X|| / ||X||` over the random runs.
    pub true_error: f64,
    pub runs: usize,
    pub seed: u64,
}

struct Example2Base {
    inst: EquationInstance,
    x: HermitianMatrix,
    sb: ScalarBounds,
}

fn example2_base() -> Result<Example2Base> {
    let inst = example2();
    let x = solve(&inst, &SolveSettings::default().with_tol(REFERENCE_TOL))?.x;
    let sb = scalar_bounds(&inst, SCALAR_TOL, SCALAR_MAX_ITER)?;
    Ok(Example2Base { inst, x, sb })
}

/// Conditions and the three bounds for the deterministic direction
/// `D = A`, which fixes `||dA_1|| = 10^-j` and `||dA_2|| = 3 * 10^(-j-1)`.
pub fn example2_bounds(j: i32) -> Result<(FeasibilityTable, f64, f64, f64, f64)> {
    let b = example2_base()?;
    bounds_for(&b, &example2_delta(j, &base_matrix()))
}

fn bounds_for(b: &Example2Base, spec: &PerturbationSpec) -> Result<(FeasibilityTable, f64, f64, f64, f64)> {
    let bundle = build_bundle(&b.inst, &b.x)?;
    let table = feasibility_table(&b.inst, &b.sb, &bundle, spec)?;
    let r1 = xi1(&b.inst, &b.sb, spec)?.relative_bound;
    let r2 = xi2(&b.inst, &b.x, &b.sb, spec)?.relative_bound;
    let r3 = xi3(&b.inst, &b.x, &bundle, spec)?;
    Ok((table, r1, r2, r3.absolute_bound.unwrap_or(f64::NAN), r3.relative_bound))
}

/// Feasibility table, bounds and the true relative error averaged
/// geometrically over `runs` random symmetric directions.
pub fn run_example2(j: i32, seed: u64, runs: usize, exec: Execution) -> Result<Example2Report> {
    let b = example2_base()?;
    let (conditions, r1, r2, a3, r3) = bounds_for(&b, &example2_delta(j, &base_matrix()))?;
    let x_norm = spectral_norm(&b.x);
    let settings = SolveSettings::default()
        .with_tol(REFERENCE_TOL)
        .with_start(StartPolicy::Explicit(b.x.as_matrix().clone()));
    let errors = par_map(exec, runs, |run| -> Result<f64> {
        let spec = example2_delta(j, &random_symmetric_direction(seed, run));
        let perturbed = b.inst.perturbed(&spec.da, &spec.dq)?;
        let xt = solve(&perturbed, &settings)?.x;
        Ok(spectral_norm(&xt.sub(&b.x)) / x_norm)
    });
    let logs = errors.into_iter().map(|e| e.map(f64::ln)).collect::<Result<Vec<f64>>>()?;
    let true_error = if logs.is_empty() {
        f64::NAN
    } else {
        (logs.iter().sum::<f64>() / logs.len() as f64).exp()
    };
    Ok(Example2Report {
        j,
        conditions,
        xi1: r1,
        xi2: r2,
        xi3: a3,
        nu_star: r3,
        true_error,
        runs,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example3Row {
    pub k: usize,
    pub true_error: f64,
    pub bound: Option<f64>,
    pub feasible: bool,
}

/// Error and residual bound for the first `steps` iterates from `X_0 = A`.
pub fn run_example3(steps: usize) -> Result<Vec<Example3Row>> {
    let inst = example3();
    let x = solve(&inst, &SolveSettings::default().with_tol(REFERENCE_TOL))?.x;
    let x0 = HermitianMatrix::from_upper(&base_matrix())?;
    trajectory(&inst, &x0, steps)?
        .iter()
        .enumerate()
        .map(|(i, xk)| {
            let rep = backward_bound(&inst, xk)?;
            Ok(Example3Row {
                k: i + 1,
                true_error: spectral_norm(&xk.sub(&x)),
                bound: rep.bound,
                feasible: rep.feasible,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example4Row {
    pub k: i32,
    /// Relative condition number with `Q` as printed, if that solve converged.
    pub as_printed: Option<f64>,
    pub iterations: usize,
    /// Same quantity with `Q` replaced by its Hermitian part.
    pub symmetrized: Option<f64>,
    /// The value taken for the row.
    pub c_rel: f64,
    /// True when `c_rel` comes from the symmetrized run.
    pub substituted: bool,
}

/// Tolerance for the conditioning study solves.
pub const EXAMPLE4_TOL: f64 = 1e-12;

fn c_rel_general(inst: &GeneralInstance) -> Result<Option<(f64, usize)>> {
    let rep = solve_general(inst, &SolveSettings::default().with_tol(EXAMPLE4_TOL))?;
    if !rep.converged {
        return Ok(None);
    }
    Ok(Some((cond_real(inst, &rep.x, Mode::Relative)?.value, rep.iterations)))
}

/// Real relative condition number for each `k`, computed without any
/// symmetrization, alongside a run on the Hermitian part of `Q`.
pub fn run_example4(ks: &[i32]) -> Result<Vec<Example4Row>> {
    ks.iter()
        .map(|&k| {
            let inst = example4(k);
            let printed = c_rel_general(&inst)?;
            let sym_q = hermitian_part(inst.q())?.into_matrix();
            let sym = GeneralInstance::new(inst.a().to_vec(), sym_q)?;
            let symmetrized = c_rel_general(&sym)?.map(|(c, _)| c);
            let (c_rel, substituted) = match (printed, symmetrized) {
                (Some((c, _)), _) => (c, false),
                (None, Some(c)) => (c, true),
                (None, None) => (f64::NAN, true),
            };
            Ok(Example4Row {
                k,
                as_printed: printed.map(|(c, _)| c),
                iterations: printed.map_or(0, |(_, it)| it),
                symmetrized,
                c_rel,
                substituted,
            })
        })
        .collect()
}
