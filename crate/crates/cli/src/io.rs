//! JSON documents for equation data, perturbations and matrices.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use matfix_core::{ComplexMatrix, HermitianMatrix, PerturbationSpec, C64};
use serde::{Deserialize, Serialize};

/// A matrix as nested rows. `im` defaults to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixObject {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixObject {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.rows())
                .map(|r| (0..m.cols()).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        let im = rows(|z| z.im);
        let has_im = im.iter().flatten().any(|v| *v != 0.0);
        Self {
            re: rows(|z| z.re),
            im: has_im.then_some(im),
        }
    }

    /// Checks the shape against `n x n` and builds the matrix. `field` names
    /// the location in error messages.
    pub fn to_matrix(&self, n: usize, field: &str) -> Result<ComplexMatrix> {
        check_rows(&self.re, n, &format!("{field}.re"))?;
        if let Some(im) = &self.im {
            check_rows(im, n, &format!("{field}.im"))?;
        }
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let im = self.im.as_ref().map_or(0.0, |m| m[r][c]);
                entries.push(C64::new(self.re[r][c], im));
            }
        }
        ComplexMatrix::from_row_major(n, n, &entries).with_context(|| format!("{field}: invalid entries"))
    }

    /// Shape check without a declared order.
    pub fn to_square(&self, field: &str) -> Result<ComplexMatrix> {
        self.to_matrix(self.re.len(), field)
    }
}

fn check_rows(rows: &[Vec<f64>], n: usize, field: &str) -> Result<()> {
    if rows.len() != n {
        bail!("{field}: {} rows, expected {n}", rows.len());
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            bail!("{field}[{i}]: {} entries, expected {n}", row.len());
        }
    }
    Ok(())
}

/// `{ n, m, Q, A }`. Also used for perturbations, with `Q` read as `dQ` and
/// `A` as `dA`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "Q")]
    pub q: MatrixObject,
    #[serde(rename = "A")]
    pub a: Vec<MatrixObject>,
}

/// Matrices of an instance file after shape checks.
pub struct RawInstance {
    pub a: Vec<ComplexMatrix>,
    pub q: ComplexMatrix,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            anyhow::anyhow!("parse error at line {}, column {}: {e}", e.line(), e.column())
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_matrices(a: &[ComplexMatrix], q: &ComplexMatrix) -> Self {
        Self {
            n: q.rows(),
            m: a.len(),
            q: MatrixObject::from_matrix(q),
            a: a.iter().map(MatrixObject::from_matrix).collect(),
        }
    }

    pub fn matrices(&self) -> Result<RawInstance> {
        if self.a.len() != self.m {
            bail!("A: {} matrices, but m = {}", self.a.len(), self.m);
        }
        let q = self.q.to_matrix(self.n, "Q")?;
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(i, m)| m.to_matrix(self.n, &format!("A[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        Ok(RawInstance { a, q })
    }

    /// Reads the document as a perturbation. `dQ` must be Hermitian.
    pub fn perturbation(&self) -> Result<PerturbationSpec> {
        let raw = self.matrices()?;
        let dq = HermitianMatrix::try_from_matrix(&raw.q, 64.0 * f64::EPSILON * raw.q.max_abs().max(1.0))
            .context("Q (perturbation of the constant term)")?;
        Ok(PerturbationSpec::new(raw.a, dq))
    }
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let obj: MatrixObject = serde_json::from_str(&text).map_err(|e| {
        anyhow::anyhow!(
            "{}: parse error at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })?;
    obj.to_square(&path.display().to_string())
}
