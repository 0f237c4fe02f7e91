//! Cost matrices, transport plans and the plan-quality metrics shared by
//! every solver.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

/// Ground costs `C_ij = c(x_i, y_j)`, finite and nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    entries: Array2<f64>,
}

impl CostMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if let Some(((i, j), c)) = entries
            .indexed_iter()
            .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "cost entry ({i}, {j}) is {c}; costs must be finite and nonnegative"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.dim()
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        dense_csv(self.entries.view())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Self::new(parse_dense_csv(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&crate::error::read_text(path.as_ref())?)
    }
}

/// A nonnegative `n × m` matrix together with the marginals it is meant to
/// carry. Feasibility is measured by [`marginal_violation`], not enforced,
/// so that truncated solver output can still be represented.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    entries: Array2<f64>,
    source_weights: Array1<f64>,
    target_weights: Array1<f64>,
}

impl TransportPlan {
    pub fn new(
        entries: Array2<f64>,
        source_weights: Array1<f64>,
        target_weights: Array1<f64>,
    ) -> Result<Self> {
        let expected = (source_weights.len(), target_weights.len());
        if entries.dim() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: entries.dim(),
            });
        }
        if let Some(((i, j), p)) = entries
            .indexed_iter()
            .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "plan entry ({i}, {j}) is {p}; plans must be finite and nonnegative"
            )));
        }
        Ok(Self {
            entries,
            source_weights,
            target_weights,
        })
    }

    /// Plan between two measures; marginals are taken from the measures.
    pub fn between(
        entries: Array2<f64>,
        source: &DiscreteMeasure,
        target: &DiscreteMeasure,
    ) -> Result<Self> {
        Self::new(
            entries,
            source.weights().to_owned(),
            target.weights().to_owned(),
        )
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn into_entries(self) -> Array2<f64> {
        self.entries
    }

    pub fn source_weights(&self) -> ArrayView1<'_, f64> {
        self.source_weights.view()
    }

    pub fn target_weights(&self) -> ArrayView1<'_, f64> {
        self.target_weights.view()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.dim()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.sum()
    }

    /// Number of entries strictly above `threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.entries.iter().filter(|p| **p > threshold).count()
    }

    /// Dense CSV: a `n,m` header line then `n` rows of `m` values.
    pub fn to_csv(&self) -> String {
        dense_csv(self.entries.view())
    }

    /// Parses a dense CSV; marginals are taken from the row and column sums.
    pub fn from_csv(text: &str) -> Result<Self> {
        let entries = parse_dense_csv(text)?;
        let rows = entries.sum_axis(ndarray::Axis(1));
        let cols = entries.sum_axis(ndarray::Axis(0));
        Self::new(entries, rows, cols)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn dense_csv(entries: ArrayView2<'_, f64>) -> String {
    let (n, m) = entries.dim();
    let mut out = String::with_capacity(n * m * 12 + 16);
    let _ = writeln!(out, "{n},{m}");
    for row in entries.rows() {
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x}");
        }
        out.push('\n');
    }
    out
}

fn parse_dense_csv(text: &str) -> Result<Array2<f64>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("bad header {header:?}: {e}")))?;
    let [n, m] = dims[..] else {
        return Err(Error::Parse(format!(
            "header must be `n,m`, got {header:?}"
        )));
    };
    let mut entries = Array2::zeros((n, m));
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {n} rows, found {i}")))?;
        let values: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        if values.len() != m {
            return Err(Error::Parse(format!(
                "row {}: expected {m} values, found {}",
                i + 1,
                values.len()
            )));
        }
        entries.row_mut(i).assign(&Array1::from(values));
    }
    if lines.next().is_some() {
        return Err(Error::Parse(format!("more than {n} rows")));
    }
    Ok(entries)
}

fn check_shape(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, found })
    }
}

/// Euclidean ground cost `‖x_i − y_j‖₂`.
pub fn cost_matrix(source: &DiscreteMeasure, target: &DiscreteMeasure) -> Result<CostMatrix> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            source_dim: source.dim(),
            target_dim: target.dim(),
        });
    }
    let (n, m) = (source.len(), target.len());
    let xs = source.atoms();
    let ys = target.atoms();
    let entries = Array2::from_shape_fn((n, m), |(i, j)| euclidean(xs.row(i), ys.row(j)));
    Ok(CostMatrix { entries })
}

pub(crate) fn euclidean(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `αβᵀ`.
pub fn independent_coupling(source: &DiscreteMeasure, target: &DiscreteMeasure) -> TransportPlan {
    let a = source.weights();
    let b = target.weights();
    let entries = Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j]);
    TransportPlan {
        entries,
        source_weights: a.to_owned(),
        target_weights: b.to_owned(),
    }
}

/// `⟨C, P⟩`.
pub fn plan_cost(cost: &CostMatrix, plan: &TransportPlan) -> Result<f64> {
    check_shape(cost.shape(), plan.shape())?;
    Ok(frobenius(cost.entries(), plan.entries()))
}

pub(crate) fn frobenius(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + x * y)
}

/// `KL(P | Q) = Σ P_ij log(P_ij / Q_ij)` with `0 log(0/q) = 0`.
pub fn kl_divergence(plan: &TransportPlan, reference: &TransportPlan) -> Result<f64> {
    kl_entries(plan.entries(), reference.entries())
}

pub(crate) fn kl_entries(p: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>) -> Result<f64> {
    check_shape(q.dim(), p.dim())?;
    let mut total = 0.0;
    for ((idx, &pij), &qij) in p.indexed_iter().zip(q.iter()) {
        if pij > 0.0 {
            if qij <= 0.0 {
                return Err(Error::AbsoluteContinuity {
                    row: idx.0,
                    col: idx.1,
                    mass: pij,
                });
            }
            total += pij * (pij / qij).ln();
        }
    }
    Ok(total)
}

/// ∞-norm distance between the plan's row/column sums and its marginals.
pub fn marginal_violation(plan: &TransportPlan) -> f64 {
    marginal_violation_entries(plan.entries(), plan.source_weights(), plan.target_weights())
}

pub(crate) fn marginal_violation_entries(
    p: ArrayView2<'_, f64>,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut cols = vec![0.0; b.len()];
    for (i, row) in p.rows().into_iter().enumerate() {
        let mut s = 0.0;
        for (j, x) in row.iter().enumerate() {
            s += x;
            cols[j] += x;
        }
        worst = worst.max((s - a[i]).abs());
    }
    for (j, s) in cols.iter().enumerate() {
        worst = worst.max((s - b[j]).abs());
    }
    worst
}

/// Entrywise `Σ |P_ij − Q_ij|`.
pub fn l1_error(plan: &TransportPlan, reference: &TransportPlan) -> Result<f64> {
    check_shape(reference.shape(), plan.shape())?;
    Ok(l1_entries(plan.entries(), reference.entries()))
}

pub(crate) fn l1_entries(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    Zip::from(a)
        .and(b)
        .fold(0.0, |acc, x, y| acc + (x - y).abs())
}
