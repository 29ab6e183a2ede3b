//! Perturbation bounds for the solution under changes `dA_i`, `dQ`.
//!
//! Three bounds with increasing sharpness and increasing cost:
//!
//! - `xi1`: relative bound from the a priori scalar `beta` alone.
//! - `xi2`: coefficient-only perturbations, integrated along `A + t dA`.
//! - `xi3`: absolute bound from the operator norms of `L^{-1}` and `P_i`
//!   at the computed solution.
//!
//! Each bound has hypotheses that are checked with strict inequalities and no
//! slack. The six-entry [`feasibility_table`] reports all of them at once.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::ScalarBounds;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, spectral_norm, unvec, vec, ComplexMatrix, HermitianMatrix};
use crate::operators::{OperatorBundle, OperatorNorm};
use crate::solver::{EquationData, EquationInstance};

/// Perturbations `dA_1..dA_m` and `dQ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSpec {
    pub da: Vec<ComplexMatrix>,
    pub dq: HermitianMatrix,
}

impl PerturbationSpec {
    pub fn new(da: Vec<ComplexMatrix>, dq: HermitianMatrix) -> Self {
        Self { da, dq }
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            da: vec![ComplexMatrix::zeros(n, n); m],
            dq: HermitianMatrix::zeros(n),
        }
    }

    pub fn da_norms(&self) -> Vec<f64> {
        self.da.iter().map(spectral_norm).collect()
    }

    pub fn dq_norm(&self) -> f64 {
        spectral_norm(&self.dq)
    }

    /// Scales every component by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            da: self.da.iter().map(|d| d.scale(t)).collect(),
            dq: self.dq.scale(t),
        }
    }

    pub fn check_against<D: EquationData + ?Sized>(&self, data: &D) -> Result<()> {
        let n = data.order();
        if self.da.len() != data.count() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient perturbations for {} coefficients",
                self.da.len(),
                data.count()
            )));
        }
        if self.dq.order() != n {
            return Err(Error::DimensionMismatch(format!(
                "dQ has order {}, equation has order {n}",
                self.dq.order()
            )));
        }
        for (i, d) in self.da.iter().enumerate() {
            if d.rows() != n || d.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "dA[{i}] is {}x{}, expected {n}x{n}",
                    d.rows(),
                    d.cols()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Requirement {
    Positive,
    NonNegative,
}

/// A named hypothesis value with its pass/fail verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub value: f64,
    pub requirement: Requirement,
    pub pass: bool,
}

impl Condition {
    fn positive(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            requirement: Requirement::Positive,
            pass: value > 0.0,
        }
    }

    fn non_negative(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            requirement: Requirement::NonNegative,
            pass: value >= 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Xi1,
    Xi2,
    Xi3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub relative_bound: f64,
    pub absolute_bound: Option<f64>,
    pub conditions: Vec<Condition>,
    pub inputs: BTreeMap<String, f64>,
    pub operator_norm: Option<OperatorNorm>,
}

fn check(bound: &'static str, conditions: &[Condition]) -> Result<()> {
    let violated: Vec<Condition> = conditions.iter().filter(|c| !c.pass).cloned().collect();
    if violated.is_empty() {
        Ok(())
    } else {
        Err(Error::ConditionViolated { bound, violated })
    }
}

fn coefficient_norms(instance: &EquationInstance) -> Vec<f64> {
    instance.a().iter().map(spectral_norm).collect()
}

struct Xi1Terms {
    b: f64,
    s: f64,
    disc: f64,
}

fn xi1_terms(beta: f64, a_norms: &[f64], da_norms: &[f64], dq_norm: f64) -> Xi1Terms {
    let sum_a2: f64 = a_norms.iter().map(|a| a * a).sum();
    let b = beta * beta + beta * dq_norm - sum_a2;
    let s = da_norms
        .iter()
        .zip(a_norms)
        .map(|(d, a)| d * (2.0 * a + d))
        .sum::<f64>();
    let disc = b * b - 4.0 * beta * beta * (beta * dq_norm + s);
    Xi1Terms { b, s, disc }
}

/// Relative bound `||X~ - X|| / ||X|| <= xi1` that needs only `beta`.
///
/// Evaluated as `2 (s + beta ||dQ||) / (b + sqrt(b^2 - 4 beta^2 (beta ||dQ|| + s)))`,
/// which stays finite when every `dA_i` vanishes.
pub fn xi1(instance: &EquationInstance, sb: &ScalarBounds, spec: &PerturbationSpec) -> Result<BoundReport> {
    spec.check_against(instance)?;
    let beta = sb.beta;
    let a_norms = coefficient_norms(instance);
    let da_norms = spec.da_norms();
    let dq_norm = spec.dq_norm();
    let t = xi1_terms(beta, &a_norms, &da_norms, dq_norm);
    let conditions = vec![
        Condition::positive("b", t.b),
        Condition::positive("2beta^2-b", 2.0 * beta * beta - t.b),
        Condition::non_negative("discriminant", t.disc),
    ];
    check("xi1", &conditions)?;
    let rel = 2.0 * (t.s + beta * dq_norm) / (t.b + t.disc.sqrt());
    let inputs = BTreeMap::from([
        ("b".to_string(), t.b),
        ("s".to_string(), t.s),
        ("beta".to_string(), beta),
        ("norm_dQ".to_string(), dq_norm),
    ]);
    Ok(BoundReport {
        kind: BoundKind::Xi1,
        relative_bound: rel,
        absolute_bound: None,
        conditions,
        inputs,
        operator_norm: None,
    })
}

/// Bound for coefficient-only perturbations. Rejects any nonzero `dQ`.
pub fn xi2(
    instance: &EquationInstance,
    x: &HermitianMatrix,
    sb: &ScalarBounds,
    spec: &PerturbationSpec,
) -> Result<BoundReport> {
    spec.check_against(instance)?;
    let dq_norm = spec.dq_norm();
    if dq_norm > 0.0 {
        return Err(Error::NonzeroDeltaQ { norm: dq_norm });
    }
    let beta = sb.beta;
    let a_norms = coefficient_norms(instance);
    let da_norms = spec.da_norms();
    let beta2 = beta * beta;
    let gap0 = beta2 - a_norms.iter().map(|a| a * a).sum::<f64>();
    let gap1 = beta2
        - a_norms
            .iter()
            .zip(&da_norms)
            .map(|(a, d)| (a + d).powi(2))
            .sum::<f64>();
    let conditions = vec![
        Condition::positive("beta^2-sum|A|^2", gap0),
        Condition::positive("beta^2-sum(|A|+|dA|)^2", gap1),
    ];
    check("xi2", &conditions)?;
    let numer: f64 = a_norms.iter().zip(&da_norms).map(|(a, d)| (a + d) * d).sum();
    let abs = 2.0 * beta * numer / gap1;
    let x_norm = spectral_norm(x);
    let inputs = BTreeMap::from([
        ("beta".to_string(), beta),
        ("norm_X".to_string(), x_norm),
    ]);
    Ok(BoundReport {
        kind: BoundKind::Xi2,
        relative_bound: abs / x_norm,
        absolute_bound: Some(abs),
        conditions,
        inputs,
        operator_norm: None,
    })
}

struct Xi3Terms {
    epsilon: f64,
    sigma: f64,
    threshold: f64,
}

fn xi3_terms(instance: &EquationInstance, bundle: &OperatorBundle, spec: &PerturbationSpec) -> Xi3Terms {
    let (l, zeta, theta) = (bundle.l, bundle.zeta, bundle.theta);
    let a_norms = coefficient_norms(instance);
    let da_norms = spec.da_norms();
    let epsilon = spec.dq_norm() / l
        + da_norms
            .iter()
            .zip(&bundle.n_ops)
            .map(|(d, n)| n * d + zeta / l * d * d)
            .sum::<f64>();
    let sigma = zeta / l
        * a_norms
            .iter()
            .zip(&da_norms)
            .zip(&bundle.theta_is)
            .map(|((m, d), t)| ((m + d) * zeta + t) * d)
            .sum::<f64>();
    let threshold = l * (1.0 - sigma).powi(2)
        / (zeta * (l + l * sigma + 2.0 * theta + 2.0 * ((l * sigma + theta) * (theta + l)).sqrt()));
    Xi3Terms {
        epsilon,
        sigma,
        threshold,
    }
}

/// Absolute bound `||X~ - X|| <= xi3` from the operator norms at `x`.
///
/// `relative_bound` is `xi3 / ||X||`.
pub fn xi3(
    instance: &EquationInstance,
    x: &HermitianMatrix,
    bundle: &OperatorBundle,
    spec: &PerturbationSpec,
) -> Result<BoundReport> {
    spec.check_against(instance)?;
    let t = xi3_terms(instance, bundle, spec);
    let (l, zeta, theta) = (bundle.l, bundle.zeta, bundle.theta);
    let conditions = vec![
        Condition::positive("1-sigma", 1.0 - t.sigma),
        Condition::positive("threshold-epsilon", t.threshold - t.epsilon),
    ];
    check("xi3", &conditions)?;
    let p = 1.0 + zeta * t.epsilon - t.sigma;
    let disc = l * l * p * p - 4.0 * l * zeta * t.epsilon * (l + theta);
    let abs = 2.0 * l * t.epsilon / (l * p + disc.max(0.0).sqrt());
    let x_norm = spectral_norm(x);
    let inputs = BTreeMap::from([
        ("l".to_string(), l),
        ("zeta".to_string(), zeta),
        ("theta".to_string(), theta),
        ("epsilon".to_string(), t.epsilon),
        ("sigma".to_string(), t.sigma),
        ("norm_X".to_string(), x_norm),
    ]);
    Ok(BoundReport {
        kind: BoundKind::Xi3,
        relative_bound: abs / x_norm,
        absolute_bound: Some(abs),
        conditions,
        inputs,
        operator_norm: Some(bundle.norm),
    })
}

/// The hypotheses of all three bounds, as `con1..con6`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityTable {
    pub entries: Vec<Condition>,
}

impl FeasibilityTable {
    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.entries.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|c| c.pass)
    }
}

pub fn feasibility_table(
    instance: &EquationInstance,
    sb: &ScalarBounds,
    bundle: &OperatorBundle,
    spec: &PerturbationSpec,
) -> Result<FeasibilityTable> {
    spec.check_against(instance)?;
    let beta2 = sb.beta * sb.beta;
    let a_norms = coefficient_norms(instance);
    let da_norms = spec.da_norms();
    let t1 = xi1_terms(sb.beta, &a_norms, &da_norms, spec.dq_norm());
    let con2 = beta2 - a_norms.iter().map(|a| a * a).sum::<f64>();
    let con3 = con2 * con2 - 4.0 * beta2 * t1.s;
    let con4 = beta2
        - a_norms
            .iter()
            .zip(&da_norms)
            .map(|(a, d)| (a + d).powi(2))
            .sum::<f64>();
    let t3 = xi3_terms(instance, bundle, spec);
    Ok(FeasibilityTable {
        entries: vec![
            Condition::positive("con1", 2.0 * beta2 - t1.b),
            Condition::positive("con2", con2),
            Condition::non_negative("con3", con3),
            Condition::positive("con4", con4),
            Condition::positive("con5", 1.0 - t3.sigma),
            Condition::positive("con6", t3.threshold - t3.epsilon),
        ],
    })
}

/// First-order change `L^{-1}(dQ + sum_i (B_i^* dA_i + dA_i^* B_i))`.
pub fn first_order_delta(bundle: &OperatorBundle, spec: &PerturbationSpec) -> Result<HermitianMatrix> {
    let n = bundle.n;
    if spec.da.len() != bundle.b.len() || spec.dq.order() != n {
        return Err(Error::DimensionMismatch(
            "perturbation does not match the operator bundle".into(),
        ));
    }
    let rhs = bundle
        .b
        .iter()
        .zip(&spec.da)
        .fold(spec.dq.as_matrix().clone(), |acc, (bi, d)| {
            &(&acc + &(&bi.adjoint() * d)) + &(&d.adjoint() * bi)
        });
    let dx = unvec(&(bundle.l_inv.as_dmatrix() * vec(&rhs)), n, n)?;
    hermitian_part(&dx)
}
