use std::fmt::Write;

use matfix_core::ComplexMatrix;

/// Left-aligned first column, right-aligned rest.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) -> &mut Self {
        self.rows.push(cells.into_iter().map(Into::into).collect());
        self
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let width: Vec<usize> = (0..cols)
            .map(|c| {
                self.rows
                    .iter()
                    .chain(std::iter::once(&self.header))
                    .filter_map(|r| r.get(c))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (c, cell) in cells.iter().enumerate() {
                if c == 0 {
                    let _ = write!(s, "{cell:<w$}", w = width[0]);
                } else {
                    let _ = write!(s, "  {cell:>w$}", w = width[c]);
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * cols.saturating_sub(1)));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

pub fn sci(v: f64) -> String {
    format!("{v:.4e}")
}

pub fn fixed(v: f64) -> String {
    format!("{v:.4}")
}

pub fn opt_sci(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), sci)
}

/// Signed relative deviation in percent.
pub fn deviation(value: f64, reference: f64) -> String {
    format!("{:+.2}%", 100.0 * (value / reference - 1.0))
}

pub fn matrix(m: &ComplexMatrix) -> String {
    let complex = m.max_imag() > 0.0;
    let mut out = String::new();
    for r in 0..m.rows() {
        out.push_str("  ");
        for c in 0..m.cols() {
            let z = m[(r, c)];
            if complex {
                let _ = write!(out, " {:>11.4e}{:+.4e}i", z.re, z.im);
            } else {
                let _ = write!(out, " {:>11.6}", z.re);
            }
        }
        out.push('\n');
    }
    out
}
