//! Regularized OT values and their debiased divergences
//! `S(µ, ν) = OT(µ, ν) − ½ OT(µ, µ) − ½ OT(ν, ν)`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure::DiscreteMeasure;
use crate::plan::{cost_matrix, CostMatrix};
use crate::sinkhorn::{
    regularized_value, solve_eot, solve_srot, RegularizedSolution, SolverConfig,
};
use crate::sliced::SlicedConfig;

/// Solver tolerance used for every divergence term.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    /// KL toward `µ ⊗ ν` (Sinkhorn divergence).
    Entropic,
    /// KL toward the pair's smoothed sliced-OT plan (SROT divergence).
    Sliced,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceResult {
    pub value: f64,
    pub cross_term: f64,
    pub self_term_source: f64,
    pub self_term_target: f64,
    pub converged: bool,
}

impl DivergenceResult {
    fn from_terms(cross: f64, source: f64, target: f64, converged: bool) -> Self {
        Self {
            value: cross - 0.5 * source - 0.5 * target,
            cross_term: cross,
            self_term_source: source,
            self_term_target: target,
            converged,
        }
    }
}

/// The three solves behind a divergence value, kept for gradient evaluation.
#[derive(Clone, Debug)]
pub struct DivergenceEvaluation {
    pub result: DivergenceResult,
    pub cross: RegularizedSolution,
    pub source_self: RegularizedSolution,
    pub target_self: RegularizedSolution,
}

fn tightened(solver: &SolverConfig) -> SolverConfig {
    SolverConfig {
        tolerance: solver.tolerance.min(DIVERGENCE_TOLERANCE),
        ..solver.clone()
    }
}

fn solve_pair(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost: &CostMatrix,
    regularizer: Regularizer,
    sliced: &SlicedConfig,
    solver: &SolverConfig,
) -> Result<RegularizedSolution> {
    match regularizer {
        Regularizer::Entropic => solve_eot(source, target, cost, solver),
        Regularizer::Sliced => solve_srot(source, target, cost, sliced, solver),
    }
}

/// `OT_ε,SOT(µ, ν) = ⟨C, P⟩ + ε KL(P | P_ref)` at the converged SROT plan,
/// evaluated through the duals.
pub fn srot_functional(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost: &CostMatrix,
    sliced: &SlicedConfig,
    solver: &SolverConfig,
) -> Result<f64> {
    let s = solve_srot(source, target, cost, sliced, solver)?;
    Ok(regularized_value(cost, &s))
}

/// Evaluates the three terms concurrently, each with its own pair-specific
/// reference plan; the self terms reuse the cross term's direction seed.
pub fn evaluate<F>(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost_fn: F,
    regularizer: Regularizer,
    sliced: &SlicedConfig,
    solver: &SolverConfig,
) -> Result<DivergenceEvaluation>
where
    F: Fn(&DiscreteMeasure, &DiscreteMeasure) -> Result<CostMatrix> + Sync,
{
    let solver = tightened(solver);
    let run = |x: &DiscreteMeasure, y: &DiscreteMeasure| -> Result<(RegularizedSolution, f64)> {
        let c = cost_fn(x, y)?;
        let s = solve_pair(x, y, &c, regularizer, sliced, &solver)?;
        let v = regularized_value(&c, &s);
        Ok((s, v))
    };
    let (cross, (source_self, target_self)) = rayon::join(
        || run(source, target),
        || rayon::join(|| run(source, source), || run(target, target)),
    );
    let (cross, c) = cross?;
    let (source_self, s) = source_self?;
    let (target_self, t) = target_self?;
    let converged =
        cross.duals.converged && source_self.duals.converged && target_self.duals.converged;
    Ok(DivergenceEvaluation {
        result: DivergenceResult::from_terms(c, s, t, converged),
        cross,
        source_self,
        target_self,
    })
}

/// `S_ε,SOT(µ, ν)`.
pub fn srot_divergence<F>(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost_fn: F,
    sliced: &SlicedConfig,
    solver: &SolverConfig,
) -> Result<DivergenceResult>
where
    F: Fn(&DiscreteMeasure, &DiscreteMeasure) -> Result<CostMatrix> + Sync,
{
    Ok(evaluate(source, target, cost_fn, Regularizer::Sliced, sliced, solver)?.result)
}

/// `S_ε(µ, ν)` with independent-coupling references throughout.
pub fn sinkhorn_divergence<F>(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost_fn: F,
    solver: &SolverConfig,
) -> Result<DivergenceResult>
where
    F: Fn(&DiscreteMeasure, &DiscreteMeasure) -> Result<CostMatrix> + Sync,
{
    Ok(evaluate(
        source,
        target,
        cost_fn,
        Regularizer::Entropic,
        &SlicedConfig::default(),
        solver,
    )?
    .result)
}

/// Euclidean cost builder, the default for both divergences.
pub fn euclidean_cost(x: &DiscreteMeasure, y: &DiscreteMeasure) -> Result<CostMatrix> {
    cost_matrix(x, y)
}
