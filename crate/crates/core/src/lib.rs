//! Positive definite solution of `X - sum_i A_i^* X^{-1} A_i = Q` with
//! a priori enclosures, perturbation bounds, a residual-based error bound and
//! condition numbers.
//!
//! ```
//! use matfix_core::{solve, ComplexMatrix, EquationInstance, SolveSettings};
//!
//! let a = ComplexMatrix::from_real_rows(&[vec![1.0]]).unwrap();
//! let q = ComplexMatrix::from_real_rows(&[vec![1.0]]).unwrap();
//! let inst = EquationInstance::new(vec![a.clone(), a], q).unwrap();
//! let rep = solve(&inst, &SolveSettings::default()).unwrap();
//! assert!((rep.x[(0, 0)].re - 2.0).abs() < 1e-9);
//! ```

pub mod backward;
pub mod bounds;
pub mod conditioning;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod operators;
pub mod perturbation;
pub mod reproduce;
pub mod solver;

pub use backward::{backward_bound, BackwardErrorReport};
pub use bounds::{
    coarse_interval, membership, refined_interval, scalar_bounds, MatrixInterval, ScalarBounds,
};
pub use conditioning::{cond_complex, cond_fd_oracle, cond_real, Case, ConditionReport, Mode, OracleSettings};
pub use error::{Error, Result};
pub use exec::Execution;
pub use linalg::{ComplexMatrix, HermitianMatrix, RealBlockMatrix, C64};
pub use operators::{build_bundle, build_bundle_general, OperatorBundle, OperatorNorm};
pub use perturbation::{
    feasibility_table, first_order_delta, xi1, xi2, xi3, BoundKind, BoundReport, Condition,
    FeasibilityTable, PerturbationSpec,
};
pub use solver::{
    residual, solve, solve_general, EquationData, EquationInstance, GeneralInstance, SolveReport,
    SolveSettings, StartPolicy,
};
