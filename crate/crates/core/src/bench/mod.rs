//! Synthetic benchmarks: plan error against exact OT across ε, T and L sweeps.

mod datasets;
mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use datasets::{generate, generate_with_noise, Dataset};
pub use svg::{render_svg, write_svg, SweepAxis};

use crate::error::{Error, Result};
use crate::exact::solve_exact;
use crate::measure::DiscreteMeasure;
use crate::method::{compute_plan, Method};
use crate::plan::{
    cost_matrix, independent_coupling, l1_error, marginal_violation, CostMatrix, TransportPlan,
};
use crate::sinkhorn::{Domain, SolverConfig};
use crate::sliced::{Aggregation, SlicedConfig};

/// Method label of the independent-coupling baseline rows.
pub const INDEPENDENT: &str = "independent";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRecord {
    pub dataset: String,
    pub method: String,
    /// Empty for methods without entropic regularization.
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub projections: usize,
    pub aggregation: String,
    pub l1_vs_exact: f64,
    pub runtime_ms: f64,
    pub sot_ms: f64,
    pub sinkhorn_ms: f64,
    pub converged: bool,
    pub seed: u64,
    /// Failure message; the numeric fields are zero when set.
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub datasets: Vec<Dataset>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub n: usize,
    pub epsilons: Vec<f64>,
    pub iterations: Vec<usize>,
    pub projections: Vec<usize>,
    pub aggregations: Vec<Aggregation>,
    /// Sinkhorn stopping tolerance; 0 runs all T iterations.
    pub tolerance: f64,
    pub domain: Domain,
    pub gamma: f64,
    /// Timing repetitions; the median is reported.
    pub repetitions: usize,
    /// Include independent-coupling and SOT baseline rows.
    pub baselines: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            datasets: Dataset::ALL.to_vec(),
            methods: vec![Method::Eot, Method::Srot],
            seeds: (0..5).collect(),
            n: 240,
            epsilons: vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0],
            iterations: vec![5000],
            projections: vec![100],
            aggregations: vec![Aggregation::Uniform],
            tolerance: 1e-9,
            domain: Domain::Auto,
            gamma: SlicedConfig::default().gamma,
            repetitions: 3,
            baselines: true,
        }
    }
}

impl SweepSpec {
    /// ε sweep at T = 5000.
    pub fn epsilon_sweep() -> Self {
        Self::default()
    }

    /// T sweep at ε = 0.001.
    pub fn iteration_sweep() -> Self {
        Self {
            epsilons: vec![1e-3],
            iterations: vec![10, 30, 100, 300, 1000, 3000, 5000],
            ..Self::default()
        }
    }

    /// L sweep for SROT at (ε, T) = (0.001, 5000), all aggregations.
    pub fn projection_sweep() -> Self {
        Self {
            methods: vec![Method::Srot],
            epsilons: vec![1e-3],
            projections: vec![1, 5, 10, 50, 100, 500],
            aggregations: vec![Aggregation::Uniform, Aggregation::Softmin, Aggregation::Min],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("datasets", self.datasets.is_empty()),
            ("methods", self.methods.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("epsilons", self.epsilons.is_empty()),
            ("iterations", self.iterations.is_empty()),
            ("projections", self.projections.is_empty()),
            ("aggregations", self.aggregations.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidInput(format!("sweep axis {name} is empty")));
        }
        if self.n < 2 || self.repetitions == 0 {
            return Err(Error::InvalidInput(
                "sweep needs n >= 2 and repetitions >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    method: Method,
    epsilon: f64,
    iterations: usize,
    projections: usize,
    aggregation: Aggregation,
}

fn cells(spec: &SweepSpec) -> Vec<Cell> {
    let mut out = Vec::new();
    let sliced_axes: Vec<(usize, Aggregation)> = spec
        .projections
        .iter()
        .flat_map(|&l| spec.aggregations.iter().map(move |&a| (l, a)))
        .collect();
    let reg_axes: Vec<(f64, usize)> = spec
        .epsilons
        .iter()
        .flat_map(|&e| spec.iterations.iter().map(move |&t| (e, t)))
        .collect();
    let mut push = |method, epsilon, iterations, (projections, aggregation)| {
        out.push(Cell {
            method,
            epsilon,
            iterations,
            projections,
            aggregation,
        })
    };
    let unsliced = (0, Aggregation::Uniform);
    if spec.baselines && !spec.methods.contains(&Method::Sot) {
        for &la in &sliced_axes {
            push(Method::Sot, f64::NAN, 0, la);
        }
    }
    for &method in &spec.methods {
        match method {
            Method::Exact => push(method, f64::NAN, 0, unsliced),
            Method::Sot => sliced_axes
                .iter()
                .for_each(|&la| push(method, f64::NAN, 0, la)),
            Method::Eot => reg_axes
                .iter()
                .for_each(|&(e, t)| push(method, e, t, unsliced)),
            Method::Srot => {
                for &(e, t) in &reg_axes {
                    sliced_axes.iter().for_each(|&la| push(method, e, t, la));
                }
            }
        }
    }
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

struct Instance {
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    cost: CostMatrix,
    exact: TransportPlan,
}

fn run_cell(
    spec: &SweepSpec,
    dataset: Dataset,
    seed: u64,
    inst: &Instance,
    cell: Cell,
) -> SweepRecord {
    let mut record = SweepRecord {
        dataset: dataset.name().into(),
        method: cell.method.name().into(),
        epsilon: cell.method.is_regularized().then_some(cell.epsilon),
        iterations: cell.iterations,
        projections: cell.projections,
        aggregation: if cell.projections > 0 {
            cell.aggregation.name().into()
        } else {
            String::new()
        },
        l1_vs_exact: 0.0,
        runtime_ms: 0.0,
        sot_ms: 0.0,
        sinkhorn_ms: 0.0,
        converged: false,
        seed,
        error: None,
    };
    let sliced = SlicedConfig {
        projections: cell.projections.max(1),
        aggregation: cell.aggregation,
        gamma: spec.gamma,
        seed,
        ..SlicedConfig::default()
    };
    let solver = SolverConfig {
        epsilon: if cell.epsilon.is_nan() {
            1.0
        } else {
            cell.epsilon
        },
        max_iterations: cell.iterations.max(1),
        tolerance: spec.tolerance,
        domain: spec.domain,
        trace: false,
    };
    let mut runs = Vec::with_capacity(spec.repetitions);
    for _ in 0..spec.repetitions {
        match compute_plan(
            cell.method,
            &inst.source,
            &inst.target,
            &inst.cost,
            &sliced,
            &solver,
        ) {
            Ok(r) => runs.push(r),
            Err(e) => {
                record.error = Some(e.to_string());
                return record;
            }
        }
    }
    let first = &runs[0];
    match l1_error(&first.plan, &inst.exact) {
        Ok(l1) => record.l1_vs_exact = l1,
        Err(e) => record.error = Some(e.to_string()),
    }
    record.converged =
        first.converged || marginal_violation(&first.plan) <= spec.tolerance.max(1e-9);
    if cell.method.is_regularized() {
        record.iterations = first.iterations;
    }
    record.sot_ms = median(runs.iter().map(|r| r.sot_ms).collect());
    record.sinkhorn_ms = if cell.method.is_regularized() {
        median(runs.iter().map(|r| r.solve_ms).collect())
    } else {
        0.0
    };
    record.runtime_ms = median(runs.iter().map(|r| r.total_ms()).collect());
    record
}

/// Runs every (dataset, seed, cell) job. Records come back in cell order:
/// dataset, then seed, then the independent baseline followed by the cells.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let cells = cells(spec);
    let jobs: Vec<(Dataset, u64)> = spec
        .datasets
        .iter()
        .flat_map(|&d| spec.seeds.iter().map(move |&s| (d, s)))
        .collect();
    let per_instance: Vec<Vec<SweepRecord>> = jobs
        .par_iter()
        .map(|&(dataset, seed)| {
            let failed = |e: Error| {
                vec![SweepRecord {
                    dataset: dataset.name().into(),
                    method: "exact".into(),
                    epsilon: None,
                    iterations: 0,
                    projections: 0,
                    aggregation: String::new(),
                    l1_vs_exact: 0.0,
                    runtime_ms: 0.0,
                    sot_ms: 0.0,
                    sinkhorn_ms: 0.0,
                    converged: false,
                    seed,
                    error: Some(e.to_string()),
                }]
            };
            let inst = match instance(dataset, spec.n, seed) {
                Ok(i) => i,
                Err(e) => return failed(e),
            };
            let mut out = Vec::with_capacity(cells.len() + 1);
            if spec.baselines {
                let t = Instant::now();
                let ind = independent_coupling(&inst.source, &inst.target);
                let ms = t.elapsed().as_secs_f64() * 1e3;
                out.push(SweepRecord {
                    dataset: dataset.name().into(),
                    method: INDEPENDENT.into(),
                    epsilon: None,
                    iterations: 0,
                    projections: 0,
                    aggregation: String::new(),
                    l1_vs_exact: l1_error(&ind, &inst.exact).unwrap_or(f64::NAN),
                    runtime_ms: ms,
                    sot_ms: 0.0,
                    sinkhorn_ms: 0.0,
                    converged: true,
                    seed,
                    error: None,
                });
            }
            let records: Vec<SweepRecord> = cells
                .par_iter()
                .map(|&c| run_cell(spec, dataset, seed, &inst, c))
                .collect();
            out.extend(records);
            out
        })
        .collect();
    Ok(per_instance.into_iter().flatten().collect())
}

fn instance(dataset: Dataset, n: usize, seed: u64) -> Result<Instance> {
    let (source, target) = generate(dataset, n, seed)?;
    let cost = cost_matrix(&source, &target)?;
    let exact = solve_exact(&cost, &source, &target)?.plan;
    Ok(Instance {
        source,
        target,
        cost,
        exact,
    })
}

/// Median of `l1VsExact` over successful records matching the filter.
pub fn median_l1<'a>(records: impl IntoIterator<Item = &'a SweepRecord>) -> Option<f64> {
    let v: Vec<f64> = records
        .into_iter()
        .filter(|r| !r.failed())
        .map(|r| r.l1_vs_exact)
        .collect();
    (!v.is_empty()).then(|| median(v))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Writes records as CSV, preceded by `#` comment lines with the dataset
/// generator parameters.
pub fn write_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    let bytes = csv_bytes(records)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn csv_bytes(records: &[SweepRecord]) -> Result<Vec<u8>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to emit".into()));
    }
    let mut buf = Vec::new();
    for d in Dataset::ALL {
        writeln!(buf, "# {}: {}", d.name(), d.parameters())?;
    }
    let mut w = csv::Writer::from_writer(buf);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>> {
    parse_csv(&crate::error::read_file(path.as_ref())?)
}

pub fn parse_csv(bytes: &[u8]) -> Result<Vec<SweepRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(bytes);
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// Writes `<figure>.csv` and one `<figure>_<dataset>.svg` per dataset.
pub fn emit(
    records: &[SweepRecord],
    figure: &str,
    axis: SweepAxis,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let csv_path = dir.join(format!("{figure}.csv"));
    write_csv(records, &csv_path)?;
    let mut written = vec![csv_path];
    written.extend(write_svg(records, figure, axis, dir)?);
    Ok(written)
}
