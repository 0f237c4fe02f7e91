//! Sinkhorn iterations against an arbitrary reference coupling.
//!
//! Minimizes `⟨C, P⟩ + ε KL(P | R)` over couplings of `α` and `β`. With
//! `R = αβᵀ` this is entropic OT; with `R` a (smoothed) sliced-OT plan it is
//! SROT. Both domains run exact block coordinate ascent on the dual
//!
//! ```text
//! D(f, g) = ⟨f, α⟩ + ⟨g, β⟩ − ε Σ_ij R_ij exp((f_i + g_j − C_ij) / ε)
//! ```
//!
//! and recover `P_ij = R_ij exp((f_i + g_j − C_ij)/ε) = u_i K_ij v_j`.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::{independent_coupling, CostMatrix, TransportPlan};
use crate::sliced::{self, SlicedConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Multiplicative updates `u = α ⊘ Kv`, `v = β ⊘ Kᵀu`.
    Scaling,
    /// Log-sum-exp updates on the potentials `f`, `g`.
    Log,
    /// Scaling when `ε ≥ 0.05 (max C − min C)`, log otherwise; a scaling
    /// breakdown falls back to the log domain.
    Auto,
}

impl std::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaling" => Ok(Domain::Scaling),
            "log" => Ok(Domain::Log),
            "auto" => Ok(Domain::Auto),
            other => Err(Error::InvalidInput(format!("unknown domain {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Stop once the ∞-norm marginal violation is at most this.
    pub tolerance: f64,
    pub domain: Domain,
    /// Record per-iteration violation and dual objective.
    #[serde(default)]
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            max_iterations: 5000,
            tolerance: 1e-9,
            domain: Domain::Auto,
            trace: false,
        }
    }
}

impl SolverConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Domain actually used for this cost matrix.
    pub fn resolve_domain(&self, cost: &CostMatrix) -> Domain {
        match self.domain {
            Domain::Auto => {
                if self.epsilon >= 0.05 * (cost.max() - cost.min()) {
                    Domain::Scaling
                } else {
                    Domain::Log
                }
            }
            d => d,
        }
    }
}

/// Gibbs kernel `K = R ⊙ exp(−C/ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    entries: Array2<f64>,
}

impl KernelMatrix {
    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }
}

/// Builds the Gibbs kernel; fails if any row or column underflows to zero.
pub fn kernel(cost: &CostMatrix, reference: &TransportPlan, epsilon: f64) -> Result<KernelMatrix> {
    check_shapes(cost, reference)?;
    let c = cost.entries();
    let r = reference.entries();
    let entries = Array2::from_shape_fn(c.dim(), |(i, j)| {
        let rij = r[[i, j]];
        if rij == 0.0 {
            0.0
        } else {
            rij * (-c[[i, j]] / epsilon).exp()
        }
    });
    if let Some(i) = entries
        .rows()
        .into_iter()
        .position(|row| row.iter().all(|&k| k == 0.0))
    {
        return Err(Error::InfeasibleKernel(format!(
            "kernel row {i} is identically zero at epsilon {epsilon}; use the log domain"
        )));
    }
    if let Some(j) = entries
        .columns()
        .into_iter()
        .position(|col| col.iter().all(|&k| k == 0.0))
    {
        return Err(Error::InfeasibleKernel(format!(
            "kernel column {j} is identically zero at epsilon {epsilon}; use the log domain"
        )));
    }
    Ok(KernelMatrix { entries })
}

/// `log R_ij − C_ij/ε`, with `−∞` where `R_ij = 0`.
fn log_kernel(cost: &CostMatrix, reference: &TransportPlan, epsilon: f64) -> Array2<f64> {
    let c = cost.entries();
    let r = reference.entries();
    Array2::from_shape_fn(c.dim(), |(i, j)| {
        let rij = r[[i, j]];
        if rij > 0.0 {
            rij.ln() - c[[i, j]] / epsilon
        } else {
            f64::NEG_INFINITY
        }
    })
}

fn check_shapes(cost: &CostMatrix, reference: &TransportPlan) -> Result<()> {
    if cost.shape() != reference.shape() {
        return Err(Error::ShapeMismatch {
            expected: cost.shape(),
            found: reference.shape(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub marginal_violation: f64,
    pub dual_objective: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    /// Dual objective at the start and after every half-step (`f` then `g`).
    pub block_objectives: Vec<f64>,
}

impl SolverTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,marginalViolation,dualObjective\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{}",
                r.iteration, r.marginal_violation, r.dual_objective
            );
        }
        out
    }
}

/// Dual potentials and their exponentiated scalings.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub f: Array1<f64>,
    pub g: Array1<f64>,
    /// `exp(f/ε)`; may overflow to infinity in the log domain at small ε.
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    pub iterations: usize,
    pub final_violation: f64,
    pub converged: bool,
    pub domain: Domain,
    pub epsilon: f64,
    pub trace: Option<SolverTrace>,
}

fn validate_marginals(
    shape: (usize, usize),
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
) -> Result<()> {
    if shape != (a.len(), b.len()) {
        return Err(Error::ShapeMismatch {
            expected: (a.len(), b.len()),
            found: shape,
        });
    }
    Ok(())
}

/// Multiplicative Sinkhorn from `u = v = 1`.
pub fn sinkhorn_scaling(
    kernel: &KernelMatrix,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    config: &SolverConfig,
) -> Result<DualSolution> {
    config.validate()?;
    let k = kernel.entries();
    validate_marginals(k.dim(), a, b)?;
    let eps = config.epsilon;
    let (n, m) = k.dim();
    let mut u = Array1::ones(n);
    let mut v = Array1::<f64>::ones(m);
    let mut kv = k.dot(&v);
    let mut trace = config.trace.then(SolverTrace::default);
    let scaling_objective = |u: &Array1<f64>, v: &Array1<f64>, kv: &Array1<f64>| {
        let linear: f64 = u
            .iter()
            .zip(a.iter())
            .map(|(x, w)| x.ln() * w)
            .chain(v.iter().zip(b.iter()).map(|(x, w)| x.ln() * w))
            .sum();
        let mass: f64 = u.iter().zip(kv.iter()).map(|(x, y)| x * y).sum();
        eps * linear - eps * mass
    };
    if let Some(t) = trace.as_mut() {
        t.block_objectives.push(scaling_objective(&u, &v, &kv));
    }

    let mut violation = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=config.max_iterations {
        iterations = it;
        u = &a / &kv;
        let ktu = k.t().dot(&u);
        if let Some(t) = trace.as_mut() {
            // After the u-update, Σ_i u_i (Kv)_i = Σ α_i.
            let mass: f64 = u.iter().zip(kv.iter()).map(|(x, y)| x * y).sum();
            let linear: f64 = u
                .iter()
                .zip(a.iter())
                .map(|(x, w)| x.ln() * w)
                .chain(v.iter().zip(b.iter()).map(|(x, w)| x.ln() * w))
                .sum();
            t.block_objectives.push(eps * linear - eps * mass);
        }
        v = &b / &ktu;
        kv = k.dot(&v);
        if let Some(bad) = u
            .iter()
            .chain(v.iter())
            .find(|x| !(x.is_finite() && **x > 0.0))
        {
            return Err(Error::NumericBreakdown {
                iteration: it,
                detail: format!("scaling vector entry became {bad}"),
            });
        }
        let row_violation = u
            .iter()
            .zip(kv.iter())
            .zip(a.iter())
            .map(|((x, y), w)| (x * y - w).abs())
            .fold(0.0, f64::max);
        let col_violation = v
            .iter()
            .zip(ktu.iter())
            .zip(b.iter())
            .map(|((x, y), w)| (x * y - w).abs())
            .fold(0.0, f64::max);
        violation = row_violation.max(col_violation);
        if let Some(t) = trace.as_mut() {
            let d = scaling_objective(&u, &v, &kv);
            t.block_objectives.push(d);
            t.rows.push(TraceRow {
                iteration: it,
                marginal_violation: violation,
                dual_objective: d,
            });
        }
        if violation <= config.tolerance {
            break;
        }
    }
    Ok(DualSolution {
        f: u.mapv(|x: f64| eps * x.ln()),
        g: v.mapv(|x: f64| eps * x.ln()),
        u,
        v,
        iterations,
        final_violation: violation,
        converged: violation <= config.tolerance,
        domain: Domain::Scaling,
        epsilon: eps,
        trace,
    })
}

/// Log-sum-exp terms this far below the running maximum are dropped: each
/// contributes less than `2e-22` relative to the leading term, so up to
/// `1e5` of them change the sum by under half an ulp.
const LSE_CUTOFF: f64 = -50.0;

/// `LSE_j(L_ij + g_j)` for every row, over finite entries only.
fn row_lse(log_k: ArrayView2<'_, f64>, shift: &Array1<f64>) -> Array1<f64> {
    let mut out = Array1::zeros(log_k.nrows());
    for (i, row) in log_k.rows().into_iter().enumerate() {
        let mut hi = f64::NEG_INFINITY;
        for (x, s) in row.iter().zip(shift.iter()) {
            hi = hi.max(x + s);
        }
        if hi == f64::NEG_INFINITY {
            out[i] = hi;
            continue;
        }
        let mut acc = 0.0;
        for (x, s) in row.iter().zip(shift.iter()) {
            let z = x + s - hi;
            if z > LSE_CUTOFF {
                acc += z.exp();
            }
        }
        out[i] = hi + acc.ln();
    }
    out
}

/// `LSE_i(L_ij + f_i)` for every column.
fn col_lse(log_k: ArrayView2<'_, f64>, shift: &Array1<f64>) -> Array1<f64> {
    let m = log_k.ncols();
    let mut hi = Array1::from_elem(m, f64::NEG_INFINITY);
    for (row, s) in log_k.rows().into_iter().zip(shift.iter()) {
        for (h, x) in hi.iter_mut().zip(row.iter()) {
            *h = h.max(x + s);
        }
    }
    let mut acc = Array1::<f64>::zeros(m);
    for (row, s) in log_k.rows().into_iter().zip(shift.iter()) {
        for ((a, x), h) in acc.iter_mut().zip(row.iter()).zip(hi.iter()) {
            let z = x + s - h;
            if z > LSE_CUTOFF {
                *a += z.exp();
            }
        }
    }
    Array1::from_shape_fn(m, |j| {
        if hi[j] == f64::NEG_INFINITY {
            hi[j]
        } else {
            hi[j] + acc[j].ln()
        }
    })
}

/// Log-domain Sinkhorn from `f = g = 0`. Reference entries equal to zero
/// are excluded from every log-sum-exp.
pub fn sinkhorn_log(
    cost: &CostMatrix,
    reference: &TransportPlan,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    config: &SolverConfig,
) -> Result<DualSolution> {
    config.validate()?;
    check_shapes(cost, reference)?;
    validate_marginals(cost.shape(), a, b)?;
    let eps = config.epsilon;
    let log_k = log_kernel(cost, reference, eps);
    if let Some(i) = log_k
        .rows()
        .into_iter()
        .position(|r| r.iter().all(|x| *x == f64::NEG_INFINITY))
    {
        return Err(Error::InfeasibleKernel(format!(
            "reference row {i} is zero"
        )));
    }
    if let Some(j) = log_k
        .columns()
        .into_iter()
        .position(|c| c.iter().all(|x| *x == f64::NEG_INFINITY))
    {
        return Err(Error::InfeasibleKernel(format!(
            "reference column {j} is zero"
        )));
    }
    let (n, m) = cost.shape();
    let log_a = a.mapv(f64::ln);
    let log_b = b.mapv(f64::ln);
    let mut f = Array1::<f64>::zeros(n);
    let mut g = Array1::<f64>::zeros(m);
    let mut trace = config.trace.then(SolverTrace::default);
    let linear = |f: &Array1<f64>, g: &Array1<f64>| f.dot(&a) + g.dot(&b);

    // Row log-sums against the current g, reused by the next f-update.
    let mut lse_r = row_lse(log_k.view(), &(&g / eps));
    if let Some(t) = trace.as_mut() {
        let mass: f64 = lse_r.iter().map(|x| x.exp()).sum();
        t.block_objectives.push(linear(&f, &g) - eps * mass);
    }
    let mut violation = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=config.max_iterations {
        iterations = it;
        f = eps * (&log_a - &lse_r);
        if let Some(t) = trace.as_mut() {
            let mass: f64 = f
                .iter()
                .zip(lse_r.iter())
                .map(|(fi, l)| (fi / eps + l).exp())
                .sum();
            t.block_objectives.push(linear(&f, &g) - eps * mass);
        }
        let lse_c = col_lse(log_k.view(), &(&f / eps));
        g = eps * (&log_b - &lse_c);
        lse_r = row_lse(log_k.view(), &(&g / eps));
        if let Some(bad) = f.iter().chain(g.iter()).find(|x| !x.is_finite()) {
            return Err(Error::NumericBreakdown {
                iteration: it,
                detail: format!("potential became {bad}"),
            });
        }
        let row_violation = f
            .iter()
            .zip(lse_r.iter())
            .zip(a.iter())
            .map(|((fi, l), w)| ((fi / eps + l).exp() - w).abs())
            .fold(0.0, f64::max);
        let col_violation = g
            .iter()
            .zip(lse_c.iter())
            .zip(b.iter())
            .map(|((gj, l), w)| ((gj / eps + l).exp() - w).abs())
            .fold(0.0, f64::max);
        violation = row_violation.max(col_violation);
        if let Some(t) = trace.as_mut() {
            let mass: f64 = g
                .iter()
                .zip(lse_c.iter())
                .map(|(gj, l)| (gj / eps + l).exp())
                .sum();
            let d = linear(&f, &g) - eps * mass;
            t.block_objectives.push(d);
            t.rows.push(TraceRow {
                iteration: it,
                marginal_violation: violation,
                dual_objective: d,
            });
        }
        if violation <= config.tolerance {
            break;
        }
    }
    Ok(DualSolution {
        u: f.mapv(|x| (x / eps).exp()),
        v: g.mapv(|x| (x / eps).exp()),
        f,
        g,
        iterations,
        final_violation: violation,
        converged: violation <= config.tolerance,
        domain: Domain::Log,
        epsilon: eps,
        trace,
    })
}

/// `R_ij exp((f_i + g_j − C_ij)/ε)`, computed in the log domain.
pub fn recover_plan(
    cost: &CostMatrix,
    reference: &TransportPlan,
    duals: &DualSolution,
) -> Result<TransportPlan> {
    check_shapes(cost, reference)?;
    let eps = duals.epsilon;
    let c = cost.entries();
    let r = reference.entries();
    let entries = Array2::from_shape_fn(c.dim(), |(i, j)| {
        let rij = r[[i, j]];
        if rij == 0.0 {
            0.0
        } else {
            (rij.ln() + (duals.f[i] + duals.g[j] - c[[i, j]]) / eps).exp()
        }
    });
    TransportPlan::new(
        entries,
        reference.source_weights().to_owned(),
        reference.target_weights().to_owned(),
    )
}

/// `diag(u) K diag(v)`.
pub fn scaling_plan(kernel: &KernelMatrix, u: &Array1<f64>, v: &Array1<f64>) -> Array2<f64> {
    let k = kernel.entries();
    Array2::from_shape_fn(k.dim(), |(i, j)| u[i] * k[[i, j]] * v[j])
}

/// Value of the discrete dual at `(f, g)`.
pub fn dual_objective(
    cost: &CostMatrix,
    reference: &TransportPlan,
    f: &Array1<f64>,
    g: &Array1<f64>,
    epsilon: f64,
) -> f64 {
    let c = cost.entries();
    let r = reference.entries();
    let mut mass = 0.0;
    for ((i, j), &rij) in r.indexed_iter() {
        if rij > 0.0 {
            mass += rij * ((f[i] + g[j] - c[[i, j]]) / epsilon).exp();
        }
    }
    f.dot(&reference.source_weights()) + g.dot(&reference.target_weights()) - epsilon * mass
}

/// A regularized plan with its duals and the reference it was pulled toward.
#[derive(Clone, Debug)]
pub struct RegularizedSolution {
    pub plan: TransportPlan,
    pub duals: DualSolution,
    pub reference: TransportPlan,
}

/// Runs Sinkhorn against a given reference coupling in the configured domain.
pub fn solve_with_reference(
    cost: &CostMatrix,
    reference: TransportPlan,
    config: &SolverConfig,
) -> Result<RegularizedSolution> {
    config.validate()?;
    check_shapes(cost, &reference)?;
    let a = reference.source_weights().to_owned();
    let b = reference.target_weights().to_owned();
    let run_log = |reference: TransportPlan| -> Result<RegularizedSolution> {
        let duals = sinkhorn_log(cost, &reference, a.view(), b.view(), config)?;
        let plan = recover_plan(cost, &reference, &duals)?;
        Ok(RegularizedSolution {
            plan,
            duals,
            reference,
        })
    };
    match config.resolve_domain(cost) {
        Domain::Log => run_log(reference),
        _ => {
            let scaled = kernel(cost, &reference, config.epsilon)
                .and_then(|k| sinkhorn_scaling(&k, a.view(), b.view(), config).map(|d| (k, d)));
            match scaled {
                Ok((k, duals)) => {
                    let plan = TransportPlan::new(
                        scaling_plan(&k, &duals.u, &duals.v),
                        a.clone(),
                        b.clone(),
                    )?;
                    Ok(RegularizedSolution {
                        plan,
                        duals,
                        reference,
                    })
                }
                Err(Error::NumericBreakdown { .. } | Error::InfeasibleKernel(_))
                    if config.domain == Domain::Auto =>
                {
                    run_log(reference)
                }
                Err(e) => Err(e),
            }
        }
    }
}

/// SROT: Sinkhorn against the smoothed sliced-OT plan of this pair.
pub fn solve_srot(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost: &CostMatrix,
    sliced_config: &SlicedConfig,
    solver: &SolverConfig,
) -> Result<RegularizedSolution> {
    let reference = sliced::sot_plan(source, target, cost, sliced_config)?;
    solve_with_reference(cost, reference, solver)
}

/// Entropic OT: Sinkhorn against `αβᵀ`.
pub fn solve_eot(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost: &CostMatrix,
    solver: &SolverConfig,
) -> Result<RegularizedSolution> {
    solve_with_reference(cost, independent_coupling(source, target), solver)
}

/// Primal value `⟨C, P⟩ + ε KL(P | R)`.
pub fn primal_value(cost: &CostMatrix, solution: &RegularizedSolution) -> Result<f64> {
    let transport = crate::plan::plan_cost(cost, &solution.plan)?;
    let kl = crate::plan::kl_divergence(&solution.plan, &solution.reference)?;
    Ok(transport + solution.duals.epsilon * kl)
}

/// Regularized OT value estimated from the duals as `D(f, g) + ε Σα`.
///
/// Equal to [`primal_value`] at the optimum. Away from it the dual estimate
/// is off only to second order in the marginal violation, while the primal
/// value is off to first order, so this is the value divergences use.
pub fn regularized_value(cost: &CostMatrix, solution: &RegularizedSolution) -> f64 {
    let eps = solution.duals.epsilon;
    let mass: f64 = solution.reference.source_weights().sum();
    dual_objective(
        cost,
        &solution.reference,
        &solution.duals.f,
        &solution.duals.g,
        eps,
    ) + eps * mass
}
