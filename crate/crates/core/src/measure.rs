//! Weighted point clouds.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Largest deviation of the weight sum from 1 that is silently renormalized.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// `Σ αᵢ δ_{xᵢ}` with strictly positive weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Array2<f64>,
    weights: Array1<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from `n × d` atoms and `n` weights.
    ///
    /// Weights whose sum is within [`WEIGHT_SUM_TOLERANCE`] of 1 are
    /// renormalized; anything further off is rejected, as are non-positive
    /// or non-finite weights and non-finite coordinates.
    pub fn new(atoms: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let (n, d) = atoms.dim();
        if n == 0 {
            return Err(Error::InvalidInput("measure has no atoms".into()));
        }
        if d == 0 {
            return Err(Error::InvalidInput("atoms must have dimension >= 1".into()));
        }
        if weights.len() != n {
            return Err(Error::InvalidInput(format!(
                "{n} atoms but {} weights",
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weight {i} is {}, weights must be finite and strictly positive",
                weights[i]
            )));
        }
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "atom coordinates must be finite".into(),
            ));
        }
        let total: f64 = weights.sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let weights = if total == 1.0 {
            weights
        } else {
            weights / total
        };
        Ok(Self { atoms, weights })
    }

    /// Equal weights `1/n` on every atom.
    pub fn uniform(atoms: Array2<f64>) -> Result<Self> {
        let n = atoms.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("measure has no atoms".into()));
        }
        Self::new(atoms, Array1::from_elem(n, 1.0 / n as f64))
    }

    pub fn len(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn atoms(&self) -> ArrayView2<'_, f64> {
        self.atoms.view()
    }

    pub fn atom(&self, i: usize) -> ArrayView1<'_, f64> {
        self.atoms.row(i)
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    /// Same weights, new positions.
    pub fn with_atoms(&self, atoms: Array2<f64>) -> Result<Self> {
        if atoms.dim() != self.atoms.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.atoms.dim(),
                found: atoms.dim(),
            });
        }
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "atom coordinates must be finite".into(),
            ));
        }
        Ok(Self {
            atoms,
            weights: self.weights.clone(),
        })
    }

    /// Text form: a header line `n d`, then one `w x₁ … x_d` line per atom.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.len(), self.dim());
        for (w, row) in self.weights.iter().zip(self.atoms.rows()) {
            let _ = write!(out, "{w}");
            for x in row {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty measure file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad header {header:?}: {e}")))?;
        let [n, d] = dims[..] else {
            return Err(Error::Parse(format!(
                "header must be `n d`, got {header:?}"
            )));
        };
        let mut atoms = Array2::zeros((n, d));
        let mut weights = Array1::zeros(n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {n} atom lines, found {i}")))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))?;
            if values.len() != d + 1 {
                return Err(Error::Parse(format!(
                    "line {}: expected {} numbers, found {}",
                    i + 2,
                    d + 1,
                    values.len()
                )));
            }
            weights[i] = values[0];
            for (k, x) in values[1..].iter().enumerate() {
                atoms[[i, k]] = *x;
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse(format!("more than {n} atom lines")));
        }
        Self::new(atoms, weights)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&crate::error::read_text(path.as_ref())?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
