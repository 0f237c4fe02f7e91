//! Explicit-Euler particle flows `X ← X − η n ∇_X D(X, Y)` driven by a
//! debiased divergence.
//!
//! Gradients hold every transport plan and reference plan fixed at its
//! converged value (envelope theorem), so only the ground cost is
//! differentiated: `∂/∂x_i ⟨C, P⟩ = Σ_j P_ij (x_i − y_j)/‖x_i − y_j‖`.
//! The self term `OT(X, X)` sees `x_i` in both slots.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::divergence::{self, Regularizer};
use crate::error::{Error, Result};
use crate::exact::solve_exact;
use crate::measure::DiscreteMeasure;
use crate::plan::{cost_matrix, independent_coupling, TransportPlan};
use crate::sinkhorn::{regularized_value, solve_with_reference, SolverConfig};
use crate::sliced::{sot_plan, SlicedConfig};

/// Denominator floor for the Euclidean-cost gradient at coincident points.
pub const DISTANCE_FLOOR: f64 = 1e-12;

/// Positions whose norm exceeds this abort the flow.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowObjective {
    Sinkhorn,
    Srot,
    /// Unregularized OT cost (cross term only); a sanity baseline.
    Exact,
}

impl std::str::FromStr for FlowObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinkhorn" => Ok(Self::Sinkhorn),
            "srot" => Ok(Self::Srot),
            "exact" => Ok(Self::Exact),
            other => Err(Error::InvalidInput(format!("unknown divergence {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub step_size: f64,
    pub steps: usize,
    pub objective: FlowObjective,
    pub solver: SolverConfig,
    pub sliced: SlicedConfig,
    pub evaluation_stride: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step_size: 0.05,
            steps: 100,
            objective: FlowObjective::Srot,
            solver: SolverConfig::new(0.5),
            sliced: SlicedConfig::default(),
            evaluation_stride: 1,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidInput("step size must be positive".into()));
        }
        if self.evaluation_stride == 0 {
            return Err(Error::InvalidInput("evaluation stride must be >= 1".into()));
        }
        self.solver.validate()?;
        self.sliced.validate()
    }
}

#[derive(Clone, Debug)]
pub struct FlowGradient {
    pub gradient: Array2<f64>,
    /// All inner solves met their tolerance.
    pub converged: bool,
}

/// Adds `scale · Σ_j P_ij (x_i − y_j)/max(‖x_i − y_j‖, δ)` to row `i` of `grad`.
fn accumulate_rows(
    grad: &mut Array2<f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    plan: ArrayView2<'_, f64>,
    scale: f64,
) {
    let d = x.ncols();
    for (i, prow) in plan.rows().into_iter().enumerate() {
        for (j, &p) in prow.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let dist = crate::plan::euclidean(x.row(i), y.row(j)).max(DISTANCE_FLOOR);
            let w = scale * p / dist;
            for k in 0..d {
                grad[[i, k]] += w * (x[[i, k]] - y[[j, k]]);
            }
        }
    }
}

/// Gradient of `⟨C(X, X), Q⟩` with respect to `X`, both slots.
fn accumulate_self(
    grad: &mut Array2<f64>,
    x: ArrayView2<'_, f64>,
    plan: ArrayView2<'_, f64>,
    scale: f64,
) {
    accumulate_rows(grad, x, x, plan, scale);
    accumulate_rows(grad, x, x, plan.t(), scale);
}

/// Analytic position gradient of the configured objective.
pub fn flow_gradient(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    config: &FlowConfig,
) -> Result<FlowGradient> {
    let x = source.atoms();
    let mut grad = Array2::zeros(x.dim());
    match config.objective {
        FlowObjective::Exact => {
            let c = cost_matrix(source, target)?;
            let sol = solve_exact(&c, source, target)?;
            accumulate_rows(&mut grad, x, target.atoms(), sol.plan.entries(), 1.0);
            Ok(FlowGradient {
                gradient: grad,
                converged: true,
            })
        }
        FlowObjective::Sinkhorn | FlowObjective::Srot => {
            let reg = regularizer(config.objective);
            let eval = divergence::evaluate(
                source,
                target,
                divergence::euclidean_cost,
                reg,
                &config.sliced,
                &config.solver,
            )?;
            accumulate_rows(&mut grad, x, target.atoms(), eval.cross.plan.entries(), 1.0);
            accumulate_self(&mut grad, x, eval.source_self.plan.entries(), -0.5);
            Ok(FlowGradient {
                gradient: grad,
                converged: eval.result.converged,
            })
        }
    }
}

fn regularizer(objective: FlowObjective) -> Regularizer {
    match objective {
        FlowObjective::Sinkhorn => Regularizer::Entropic,
        _ => Regularizer::Sliced,
    }
}

/// Reference plans computed once at the unperturbed configuration.
#[derive(Clone, Debug)]
pub struct FrozenReferences {
    pub cross: TransportPlan,
    pub source_self: TransportPlan,
}

impl FrozenReferences {
    pub fn at(
        source: &DiscreteMeasure,
        target: &DiscreteMeasure,
        config: &FlowConfig,
    ) -> Result<Self> {
        Ok(match config.objective {
            FlowObjective::Srot => Self {
                cross: sot_plan(
                    source,
                    target,
                    &cost_matrix(source, target)?,
                    &config.sliced,
                )?,
                source_self: sot_plan(
                    source,
                    source,
                    &cost_matrix(source, source)?,
                    &config.sliced,
                )?,
            },
            _ => Self {
                cross: independent_coupling(source, target),
                source_self: independent_coupling(source, source),
            },
        })
    }
}

/// `OT(X, Y) − ½ OT(X, X)` with references held fixed. The `OT(Y, Y)` term
/// does not depend on `X` and is omitted.
pub fn frozen_objective(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    references: &FrozenReferences,
    config: &FlowConfig,
) -> Result<f64> {
    if config.objective == FlowObjective::Exact {
        let c = cost_matrix(source, target)?;
        return Ok(solve_exact(&c, source, target)?.cost);
    }
    let solver = SolverConfig {
        tolerance: config
            .solver
            .tolerance
            .min(divergence::DIVERGENCE_TOLERANCE),
        ..config.solver.clone()
    };
    let cxy = cost_matrix(source, target)?;
    let cxx = cost_matrix(source, source)?;
    let cross = solve_with_reference(&cxy, references.cross.clone(), &solver)?;
    let own = solve_with_reference(&cxx, references.source_self.clone(), &solver)?;
    Ok(regularized_value(&cxy, &cross) - 0.5 * regularized_value(&cxx, &own))
}

/// Central differences `(F(X + h e_k) − F(X − h e_k)) / 2h` per coordinate.
pub fn central_differences<F>(points: &Array2<f64>, h: f64, mut value: F) -> Result<Array2<f64>>
where
    F: FnMut(&Array2<f64>) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidInput("step h must be positive".into()));
    }
    let mut grad = Array2::zeros(points.dim());
    let mut probe = points.clone();
    for idx in ndarray::indices(points.dim()) {
        let x0 = points[idx];
        probe[idx] = x0 + h;
        let up = value(&probe)?;
        probe[idx] = x0 - h;
        let down = value(&probe)?;
        probe[idx] = x0;
        grad[idx] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

/// Finite-difference gradient of the objective with references frozen at
/// the unperturbed positions.
pub fn finite_difference_gradient(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    config: &FlowConfig,
    h: f64,
) -> Result<Array2<f64>> {
    let refs = FrozenReferences::at(source, target, config)?;
    let points = source.atoms().to_owned();
    central_differences(&points, h, |p| {
        frozen_objective(&source.with_atoms(p.clone())?, target, &refs, config)
    })
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    /// Positions after each step, starting with the initial configuration.
    pub snapshots: Vec<Array2<f64>>,
    /// `(step, exact OT cost to the target)` every evaluation stride and at the end.
    pub wasserstein: Vec<(usize, f64)>,
    /// Steps whose inner solves missed their tolerance.
    pub unconverged_steps: Vec<usize>,
    /// Step at which positions blew past [`DIVERGENCE_LIMIT`], if any.
    pub aborted_at: Option<usize>,
}

impl FlowTrajectory {
    pub fn final_wasserstein(&self) -> Option<f64> {
        self.wasserstein.last().map(|w| w.1)
    }

    pub fn initial_wasserstein(&self) -> Option<f64> {
        self.wasserstein.first().map(|w| w.1)
    }

    pub fn curve_csv(&self) -> String {
        let mut out = String::from("step,wasserstein\n");
        for (s, w) in &self.wasserstein {
            out.push_str(&format!("{s},{w}\n"));
        }
        out
    }

    /// Writes `wasserstein.csv` and one measure file per evaluated step.
    pub fn write_to(&self, dir: impl AsRef<Path>, weights: &Array1<f64>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("wasserstein.csv"), self.curve_csv())?;
        for (step, _) in &self.wasserstein {
            let m = DiscreteMeasure::new(self.snapshots[*step].clone(), weights.clone())?;
            m.write(dir.join(format!("snapshot_{step:05}.txt")))?;
        }
        Ok(())
    }
}

fn exact_distance(x: &DiscreteMeasure, y: &DiscreteMeasure) -> Result<f64> {
    Ok(solve_exact(&cost_matrix(x, y)?, x, y)?.cost)
}

/// Runs the explicit Euler flow from `initial` toward `target`.
pub fn run_flow(
    initial: &DiscreteMeasure,
    target: &DiscreteMeasure,
    config: &FlowConfig,
) -> Result<FlowTrajectory> {
    config.validate()?;
    let n = initial.len();
    if target.len() != n {
        return Err(Error::InvalidInput(format!(
            "flow needs equal atom counts, got {n} and {}",
            target.len()
        )));
    }
    let uniform = 1.0 / n as f64;
    if initial
        .weights()
        .iter()
        .chain(target.weights().iter())
        .any(|w| (w - uniform).abs() > 1e-12)
    {
        return Err(Error::InvalidInput("flow needs uniform weights".into()));
    }

    let mut current = initial.clone();
    let mut traj = FlowTrajectory {
        snapshots: vec![current.atoms().to_owned()],
        wasserstein: vec![(0, exact_distance(&current, target)?)],
        unconverged_steps: Vec::new(),
        aborted_at: None,
    };
    for step in 1..=config.steps {
        let g = flow_gradient(&current, target, config)?;
        if !g.converged {
            traj.unconverged_steps.push(step);
        }
        let next = current.atoms().to_owned() - g.gradient * (config.step_size * n as f64);
        let too_far = next
            .rows()
            .into_iter()
            .any(|r| !(r.dot(&r).sqrt() <= DIVERGENCE_LIMIT));
        if too_far {
            traj.aborted_at = Some(step);
            break;
        }
        current = current.with_atoms(next)?;
        traj.snapshots.push(current.atoms().to_owned());
        if step % config.evaluation_stride == 0 || step == config.steps {
            traj.wasserstein
                .push((step, exact_distance(&current, target)?));
        }
    }
    Ok(traj)
}

/// Two isotropic Gaussian blobs in `R²` with centers `separation` apart:
/// the initial cloud around the origin, the target around `(separation, 0)`.
pub fn gaussian_blobs(
    n: usize,
    separation: f64,
    std: f64,
    seed: u64,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let initial = Array2::from_shape_fn((n, 2), |_| normal.sample(&mut rng));
    let target = Array2::from_shape_fn((n, 2), |(_, k)| {
        normal.sample(&mut rng) + if k == 0 { separation } else { 0.0 }
    });
    Ok((
        DiscreteMeasure::uniform(initial)?,
        DiscreteMeasure::uniform(target)?,
    ))
}
