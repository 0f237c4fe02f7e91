//! Sliced-OT reference plans.
//!
//! Each random direction projects both measures to the line, where the
//! optimal plan is the north-west-corner coupling of the sorted weights.
//! That 1D plan is lifted back to the original atom indices, and the lifted
//! plans are aggregated over directions and mixed with `αβᵀ`.

use std::cmp::Ordering;

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::{CostMatrix, TransportPlan};

/// How lifted plans are weighted when averaged over directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// `w_l = 1`.
    Uniform,
    /// `w_l = exp(−cost_l / τ)` with `cost_l` the projected 1D transport cost.
    Softmin,
    /// One-hot on the direction whose lifted plan has the lowest ambient cost.
    Min,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Uniform => "uniform",
            Aggregation::Softmin => "softmin",
            Aggregation::Min => "min",
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Aggregation::Uniform),
            "softmin" => Ok(Aggregation::Softmin),
            "min" => Ok(Aggregation::Min),
            other => Err(Error::InvalidInput(format!(
                "unknown aggregation {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicedConfig {
    pub projections: usize,
    pub aggregation: Aggregation,
    pub softmin_temperature: f64,
    /// Mixing weight of the independent coupling in the reference plan.
    pub gamma: f64,
    pub seed: u64,
}

impl Default for SlicedConfig {
    fn default() -> Self {
        Self {
            projections: 100,
            aggregation: Aggregation::Uniform,
            softmin_temperature: 0.1,
            gamma: 1e-8,
            seed: 0,
        }
    }
}

impl SlicedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.projections == 0 {
            return Err(Error::InvalidInput("projection count must be >= 1".into()));
        }
        if !(self.softmin_temperature > 0.0 && self.softmin_temperature.is_finite()) {
            return Err(Error::InvalidInput(
                "softmin temperature must be positive".into(),
            ));
        }
        check_gamma(self.gamma)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("gamma {gamma} outside [0, 1]")))
    }
}

/// A unit vector in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction(Array1<f64>);

impl Direction {
    /// Normalizes `v`; fails on the zero vector.
    pub fn new(v: Array1<f64>) -> Result<Self> {
        let norm = v.dot(&v).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidInput("direction must be nonzero".into()));
        }
        Ok(Self(v / norm))
    }

    pub fn components(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `L` directions drawn as normalized standard-normal vectors.
///
/// Direction `l` comes from its own ChaCha stream keyed by `(seed, l)`, so
/// the set does not depend on how directions are later scheduled.
pub fn sample_directions(projections: usize, dimension: usize, seed: u64) -> Vec<Direction> {
    (0..projections)
        .map(|l| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(l as u64);
            loop {
                let v: Array1<f64> =
                    Array1::from_shape_fn(dimension, |_| rng.sample(StandardNormal));
                if let Ok(d) = Direction::new(v) {
                    break d;
                }
            }
        })
        .collect()
}

/// A measure pushed to the line, sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    /// `permutation[rank]` is the original atom index at that rank.
    pub permutation: Vec<usize>,
}

/// Projects onto `direction` and sorts by `(value, original index)`.
pub fn project(measure: &DiscreteMeasure, direction: &Direction) -> Result<Projection> {
    if measure.dim() != direction.dim() {
        return Err(Error::DimensionMismatch {
            source_dim: measure.dim(),
            target_dim: direction.dim(),
        });
    }
    let raw: Vec<f64> = measure
        .atoms()
        .rows()
        .into_iter()
        .map(|x| x.dot(&direction.0))
        .collect();
    let mut permutation: Vec<usize> = (0..raw.len()).collect();
    // sort_by is stable, so equal values keep index order.
    permutation.sort_by(|&a, &b| raw[a].partial_cmp(&raw[b]).unwrap_or(Ordering::Equal));
    let w = measure.weights();
    Ok(Projection {
        values: permutation.iter().map(|&i| raw[i]).collect(),
        weights: permutation.iter().map(|&i| w[i]).collect(),
        permutation,
    })
}

/// Monotone 1D coupling in rank coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct OneDPlan {
    /// `(source rank, target rank, mass)`, staircase ordered.
    pub pairs: Vec<(usize, usize, f64)>,
}

impl OneDPlan {
    pub fn total_mass(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).sum()
    }

    /// `Σ mass · |s_rank − t_rank|` for the projected values.
    pub fn cost(&self, source_values: &[f64], target_values: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|&(i, j, w)| w * (source_values[i] - target_values[j]).abs())
            .sum()
    }
}

/// North-west-corner coupling of two sorted weight sequences (the discrete
/// quantile coupling). Each step moves the smaller of the remaining row and
/// column masses.
pub fn one_d_plan(source_weights: &[f64], target_weights: &[f64]) -> OneDPlan {
    let (n, m) = (source_weights.len(), target_weights.len());
    let mut pairs = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    let mut ra = source_weights.first().copied().unwrap_or(0.0);
    let mut rb = target_weights.first().copied().unwrap_or(0.0);
    while i < n && j < m {
        if ra < rb {
            if ra > 0.0 {
                pairs.push((i, j, ra));
            }
            rb -= ra;
            i += 1;
            ra = source_weights.get(i).copied().unwrap_or(0.0);
        } else if rb < ra {
            if rb > 0.0 {
                pairs.push((i, j, rb));
            }
            ra -= rb;
            j += 1;
            rb = target_weights.get(j).copied().unwrap_or(0.0);
        } else {
            if ra > 0.0 {
                pairs.push((i, j, ra));
            }
            i += 1;
            j += 1;
            ra = source_weights.get(i).copied().unwrap_or(0.0);
            rb = target_weights.get(j).copied().unwrap_or(0.0);
        }
    }
    OneDPlan { pairs }
}

/// Sparse lifted plan `(source index, target index, mass)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedPlan {
    pub shape: (usize, usize),
    pub entries: Vec<(usize, usize, f64)>,
}

impl LiftedPlan {
    pub fn to_dense(&self) -> Array2<f64> {
        let mut p = Array2::zeros(self.shape);
        for &(i, j, w) in &self.entries {
            p[[i, j]] += w;
        }
        p
    }

    pub fn cost(&self, cost: &CostMatrix) -> Result<f64> {
        if cost.shape() != self.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                found: cost.shape(),
            });
        }
        let c = cost.entries();
        Ok(self.entries.iter().map(|&(i, j, w)| w * c[[i, j]]).sum())
    }
}

/// Re-indexes a rank-space plan through both sort permutations.
pub fn lift(
    plan: &OneDPlan,
    source_permutation: &[usize],
    target_permutation: &[usize],
) -> LiftedPlan {
    LiftedPlan {
        shape: (source_permutation.len(), target_permutation.len()),
        entries: plan
            .pairs
            .iter()
            .map(|&(r, s, w)| (source_permutation[r], target_permutation[s], w))
            .collect(),
    }
}

/// Dense lifted plan carrying the given marginals.
pub fn lift_plan(
    plan: &OneDPlan,
    source_permutation: &[usize],
    target_permutation: &[usize],
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
) -> Result<TransportPlan> {
    if source_permutation.len() != source.len() || target_permutation.len() != target.len() {
        return Err(Error::ShapeMismatch {
            expected: (source.len(), target.len()),
            found: (source_permutation.len(), target_permutation.len()),
        });
    }
    let lifted = lift(plan, source_permutation, target_permutation);
    TransportPlan::between(lifted.to_dense(), source, target)
}

/// Ambient cost `⟨C, P_θ⟩` of a lifted plan.
pub fn lifted_cost(cost: &CostMatrix, lifted: &TransportPlan) -> Result<f64> {
    crate::plan::plan_cost(cost, lifted)
}

/// Everything computed for one direction.
#[derive(Clone, Debug)]
pub struct Slice {
    pub lifted: LiftedPlan,
    /// Transport cost of the 1D plan between the projected measures.
    pub projected_cost: f64,
    /// `⟨C, P_θ⟩` of the lifted plan.
    pub lifted_cost: f64,
}

pub fn slice(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost: &CostMatrix,
    direction: &Direction,
) -> Result<Slice> {
    let ps = project(source, direction)?;
    let pt = project(target, direction)?;
    let plan = one_d_plan(&ps.weights, &pt.weights);
    let projected_cost = plan.cost(&ps.values, &pt.values);
    let lifted = lift(&plan, &ps.permutation, &pt.permutation);
    let lifted_cost = lifted.cost(cost)?;
    Ok(Slice {
        lifted,
        projected_cost,
        lifted_cost,
    })
}

/// Normalized aggregation weights for the given slices.
pub fn aggregation_weights(
    slices: &[Slice],
    aggregation: Aggregation,
    temperature: f64,
) -> Vec<f64> {
    let l = slices.len();
    match aggregation {
        Aggregation::Uniform => vec![1.0 / l as f64; l],
        Aggregation::Softmin => {
            let lowest = slices
                .iter()
                .map(|s| s.projected_cost)
                .fold(f64::INFINITY, f64::min);
            let raw: Vec<f64> = slices
                .iter()
                .map(|s| (-(s.projected_cost - lowest) / temperature).exp())
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / total).collect()
        }
        Aggregation::Min => {
            let best = slices
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    a.1.lifted_cost
                        .partial_cmp(&b.1.lifted_cost)
                        .unwrap_or(Ordering::Equal)
                })
                .map(|(k, _)| k)
                .unwrap_or(0);
            (0..l).map(|k| if k == best { 1.0 } else { 0.0 }).collect()
        }
    }
}

/// Unsmoothed aggregate `Σ_l w_l P_θl / Σ w`, accumulated in direction order.
pub fn aggregate_plan(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost: &CostMatrix,
    config: &SlicedConfig,
) -> Result<TransportPlan> {
    config.validate()?;
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            source_dim: source.dim(),
            target_dim: target.dim(),
        });
    }
    let expected = (source.len(), target.len());
    if cost.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: cost.shape(),
        });
    }
    let directions = sample_directions(config.projections, source.dim(), config.seed);
    let slices: Vec<Slice> = directions
        .par_iter()
        .map(|d| slice(source, target, cost, d))
        .collect::<Result<_>>()?;
    let weights = aggregation_weights(&slices, config.aggregation, config.softmin_temperature);
    let mut p = Array2::zeros(expected);
    for (s, &w) in slices.iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        for &(i, j, mass) in &s.lifted.entries {
            p[[i, j]] += w * mass;
        }
    }
    TransportPlan::between(p, source, target)
}

/// `(1 − γ) P + γ αβᵀ`.
pub fn smooth_reference(plan: &TransportPlan, gamma: f64) -> Result<TransportPlan> {
    check_gamma(gamma)?;
    let a = plan.source_weights();
    let b = plan.target_weights();
    let p = plan.entries();
    let keep = 1.0 - gamma;
    let entries = Array2::from_shape_fn(p.dim(), |(i, j)| keep * p[[i, j]] + gamma * (a[i] * b[j]));
    TransportPlan::new(entries, a.to_owned(), b.to_owned())
}

/// Smoothed sliced-OT reference plan.
pub fn sot_plan(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost: &CostMatrix,
    config: &SlicedConfig,
) -> Result<TransportPlan> {
    let raw = aggregate_plan(source, target, cost, config)?;
    smooth_reference(&raw, config.gamma)
}

/// Sidecar record written next to a serialized SOT plan.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SotMetadata {
    pub projections: usize,
    pub aggregation: Aggregation,
    pub softmin_temperature: f64,
    pub gamma: f64,
    pub seed: u64,
    pub softmin_cost_basis: String,
    pub min_cost_basis: String,
}

impl From<&SlicedConfig> for SotMetadata {
    fn from(c: &SlicedConfig) -> Self {
        Self {
            projections: c.projections,
            aggregation: c.aggregation,
            softmin_temperature: c.softmin_temperature,
            gamma: c.gamma,
            seed: c.seed,
            softmin_cost_basis: "projected-1d".into(),
            min_cost_basis: "lifted-ambient".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{cost_matrix, independent_coupling, marginal_violation};
    use ndarray::array;

    #[test]
    fn directions_are_unit_and_deterministic() {
        let ds = sample_directions(3, 2, 7);
        assert_eq!(ds.len(), 3);
        for d in &ds {
            let norm = d.components().dot(&d.components()).sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
        assert_eq!(ds, sample_directions(3, 2, 7));
        assert_ne!(ds, sample_directions(3, 2, 8));
        for d in sample_directions(20, 1, 3) {
            assert!(d.components()[0] == 1.0 || d.components()[0] == -1.0);
        }
    }

    #[test]
    fn projection_sorts_with_stable_ties() {
        let m = DiscreteMeasure::uniform(array![[3.0, 4.0], [1.0, 2.0]]).unwrap();
        let p = project(&m, &Direction::new(array![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(p.values, vec![1.0, 3.0]);
        assert_eq!(p.permutation, vec![1, 0]);
        let p = project(&m, &Direction::new(array![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(p.values, vec![2.0, 4.0]);

        let tied = DiscreteMeasure::uniform(array![[1.0, 5.0], [1.0, 0.0], [0.0, 0.0]]).unwrap();
        let p = project(&tied, &Direction::new(array![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(p.permutation, vec![2, 0, 1]);
    }

    #[test]
    fn one_d_plan_examples() {
        let p = one_d_plan(&[0.25; 4], &[0.25; 4]);
        assert_eq!(p.pairs, (0..4).map(|i| (i, i, 0.25)).collect::<Vec<_>>());

        let p = one_d_plan(&[0.5, 0.5], &[0.3, 0.7]);
        assert_eq!(p.pairs.len(), 3);
        let expected = [(0, 0, 0.3), (0, 1, 0.2), (1, 1, 0.5)];
        for (got, want) in p.pairs.iter().zip(expected) {
            assert_eq!((got.0, got.1), (want.0, want.1));
            assert!((got.2 - want.2).abs() <= 1e-15);
        }
        assert!((p.total_mass() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn lifting_swaps_rows() {
        let x = DiscreteMeasure::uniform(array![[0.0], [1.0]]).unwrap();
        let plan = OneDPlan {
            pairs: vec![(0, 0, 0.5), (1, 1, 0.5)],
        };
        let same = lift_plan(&plan, &[0, 1], &[0, 1], &x, &x).unwrap();
        assert_eq!(same.entries(), array![[0.5, 0.0], [0.0, 0.5]]);
        let swapped = lift_plan(&plan, &[1, 0], &[0, 1], &x, &x).unwrap();
        assert_eq!(swapped.entries(), array![[0.0, 0.5], [0.5, 0.0]]);
        assert_eq!(marginal_violation(&swapped), 0.0);
    }

    #[test]
    fn lifted_cost_examples() {
        let x = DiscreteMeasure::uniform(array![[0.0], [1.0]]).unwrap();
        let diag = lift_plan(
            &OneDPlan {
                pairs: vec![(0, 0, 0.5), (1, 1, 0.5)],
            },
            &[0, 1],
            &[0, 1],
            &x,
            &x,
        )
        .unwrap();
        let zero_diag = CostMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(lifted_cost(&zero_diag, &diag).unwrap(), 0.0);
        let c = CostMatrix::new(array![[1.0, 3.0], [2.0, 1.0]]).unwrap();
        assert_eq!(lifted_cost(&c, &diag).unwrap(), 1.0);
    }

    #[test]
    fn smoothing_examples() {
        let x = DiscreteMeasure::uniform(array![[0.0], [1.0]]).unwrap();
        let diag = TransportPlan::between(array![[0.5, 0.0], [0.0, 0.5]], &x, &x).unwrap();
        assert_eq!(smooth_reference(&diag, 0.0).unwrap(), diag);
        assert_eq!(
            smooth_reference(&diag, 1.0).unwrap(),
            independent_coupling(&x, &x)
        );
        assert_eq!(
            smooth_reference(&diag, 0.5).unwrap().entries(),
            array![[0.375, 0.125], [0.125, 0.375]]
        );
        assert!(smooth_reference(&diag, 1.5).is_err());
        assert!(smooth_reference(&diag, -0.1).is_err());
    }

    #[test]
    fn sot_plan_special_cases() {
        let x = DiscreteMeasure::uniform(array![[0.0, 0.0], [1.0, 0.2], [0.3, 2.0], [-1.0, 0.5]])
            .unwrap();
        let y = DiscreteMeasure::uniform(array![[0.5, 0.1], [1.5, 1.2], [0.0, 1.0], [-0.5, -0.5]])
            .unwrap();
        let c = cost_matrix(&x, &y).unwrap();

        // L = 1 equals the single lifted plan, smoothed.
        let cfg = SlicedConfig {
            projections: 1,
            gamma: 0.1,
            seed: 11,
            ..SlicedConfig::default()
        };
        let d = &sample_directions(1, 2, 11)[0];
        let single =
            TransportPlan::between(slice(&x, &y, &c, d).unwrap().lifted.to_dense(), &x, &y)
                .unwrap();
        let expected = smooth_reference(&single, 0.1).unwrap();
        assert_eq!(sot_plan(&x, &y, &c, &cfg).unwrap(), expected);

        // gamma = 1 gives the independent coupling exactly.
        let cfg = SlicedConfig {
            gamma: 1.0,
            ..SlicedConfig::default()
        };
        assert_eq!(
            sot_plan(&x, &y, &c, &cfg).unwrap(),
            independent_coupling(&x, &y)
        );

        // Self pairs are diagonal in every aggregation mode.
        let cxx = cost_matrix(&x, &x).unwrap();
        for aggregation in [Aggregation::Uniform, Aggregation::Softmin, Aggregation::Min] {
            let cfg = SlicedConfig {
                aggregation,
                gamma: 0.0,
                ..SlicedConfig::default()
            };
            let p = sot_plan(&x, &x, &cxx, &cfg).unwrap();
            for ((i, j), v) in p.entries().indexed_iter() {
                if i == j {
                    assert!((v - 0.25).abs() <= 1e-15);
                } else {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }
}
