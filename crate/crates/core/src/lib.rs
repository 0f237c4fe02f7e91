//! Sliced-regularized optimal transport (SROT) for discrete measures.
//!
//! Entropic OT pulls the transport plan toward the independent coupling
//! `αβᵀ`. SROT pulls it toward a sliced-OT plan instead: an average of
//! closed-form 1D plans over random projections, lifted back to the
//! original atoms. The same Sinkhorn iterations apply with the Gibbs kernel
//! `K = P_ref ⊙ exp(−C/ε)`.
//!
//! Modules:
//! - [`measure`], [`plan`]: weighted point clouds, cost matrices, plans and metrics.
//! - [`exact`]: transportation simplex ground truth and a brute-force oracle.
//! - [`sliced`]: sliced reference plans.
//! - [`sinkhorn`]: generalized Sinkhorn in scaling and log domains; EOT and SROT solves.
//! - [`divergence`]: debiased Sinkhorn and SROT divergences.
//! - [`flow`]: divergence-driven particle flows.
//! - [`color`]: palette extraction and color transfer.
//! - [`bench`]: synthetic datasets and ablation sweeps.

pub mod bench;
pub mod color;
pub mod divergence;
pub mod error;
pub mod exact;
pub mod flow;
pub mod measure;
pub mod method;
pub mod plan;
pub mod sinkhorn;
pub mod sliced;

pub use error::{Error, Result};
pub use exact::{brute_force_small, solve_exact, ExactSolution};
pub use measure::DiscreteMeasure;
pub use method::{compute_plan, Method};
pub use plan::{
    cost_matrix, independent_coupling, kl_divergence, l1_error, marginal_violation, plan_cost,
    CostMatrix, TransportPlan,
};
pub use sinkhorn::{solve_eot, solve_srot, Domain, DualSolution, SolverConfig};
pub use sliced::{sot_plan, Aggregation, SlicedConfig};
