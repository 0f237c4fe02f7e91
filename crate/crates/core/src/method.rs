//! Uniform entry point for the four plan constructions compared throughout.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::solve_exact;
use crate::measure::DiscreteMeasure;
use crate::plan::{CostMatrix, TransportPlan};
use crate::sinkhorn::{solve_eot, solve_with_reference, SolverConfig, SolverTrace};
use crate::sliced::{sot_plan, SlicedConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sot,
    Eot,
    Srot,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Sot => "sot",
            Method::Eot => "eot",
            Method::Srot => "srot",
        }
    }

    /// Whether the method runs Sinkhorn (and so depends on ε and T).
    pub fn is_regularized(self) -> bool {
        matches!(self, Method::Eot | Method::Srot)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "sot" => Ok(Method::Sot),
            "eot" => Ok(Method::Eot),
            "srot" => Ok(Method::Srot),
            other => Err(Error::InvalidInput(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct MethodPlan {
    pub plan: TransportPlan,
    /// Sinkhorn met its tolerance (always true for non-iterative methods).
    pub converged: bool,
    pub iterations: usize,
    /// Wall time building the sliced reference.
    pub sot_ms: f64,
    /// Wall time of the exact solve or Sinkhorn loop.
    pub solve_ms: f64,
    /// Per-iteration record when the solver config asks for one.
    pub trace: Option<SolverTrace>,
}

impl MethodPlan {
    pub fn total_ms(&self) -> f64 {
        self.sot_ms + self.solve_ms
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub fn compute_plan(
    method: Method,
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost: &CostMatrix,
    sliced: &SlicedConfig,
    solver: &SolverConfig,
) -> Result<MethodPlan> {
    match method {
        Method::Exact => {
            let t = Instant::now();
            let s = solve_exact(cost, source, target)?;
            Ok(MethodPlan {
                plan: s.plan,
                converged: true,
                iterations: s.iterations,
                sot_ms: 0.0,
                solve_ms: ms(t),
                trace: None,
            })
        }
        Method::Sot => {
            let t = Instant::now();
            let plan = sot_plan(source, target, cost, sliced)?;
            Ok(MethodPlan {
                plan,
                converged: true,
                iterations: 0,
                sot_ms: ms(t),
                solve_ms: 0.0,
                trace: None,
            })
        }
        Method::Eot => {
            let t = Instant::now();
            let s = solve_eot(source, target, cost, solver)?;
            Ok(MethodPlan {
                plan: s.plan,
                converged: s.duals.converged,
                iterations: s.duals.iterations,
                sot_ms: 0.0,
                solve_ms: ms(t),
                trace: s.duals.trace,
            })
        }
        Method::Srot => {
            let t = Instant::now();
            let reference = sot_plan(source, target, cost, sliced)?;
            let sot_ms = ms(t);
            let t = Instant::now();
            let s = solve_with_reference(cost, reference, solver)?;
            Ok(MethodPlan {
                plan: s.plan,
                converged: s.duals.converged,
                iterations: s.duals.iterations,
                sot_ms,
                solve_ms: ms(t),
                trace: s.duals.trace,
            })
        }
    }
}
