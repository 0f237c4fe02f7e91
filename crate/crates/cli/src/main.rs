//! `srot` command-line entry point.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ndarray::{Array1, Array2};
use srot::bench::{self, SweepSpec};
use srot::color::run_color_transfer;
use srot::divergence::{euclidean_cost, evaluate, Regularizer};
use srot::flow::{gaussian_blobs, run_flow, FlowConfig, FlowObjective};
use srot::sliced::SotMetadata;
use srot::{
    compute_plan, cost_matrix, plan_cost, solve_exact, CostMatrix, DiscreteMeasure, Error, Method,
    SlicedConfig, SolverConfig,
};

use config::Params;

#[derive(Parser)]
#[command(
    name = "srot",
    version,
    about = "Sliced-regularized optimal transport toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a transport plan between two measures.
    Plan(Params),
    /// Evaluate a debiased divergence between two measures.
    Divergence(Params),
    /// Run a divergence-driven particle flow.
    Flow(Params),
    /// Recolor an image with the palette of another.
    ColorTransfer(Params),
    /// Run a synthetic benchmark sweep.
    Bench(Params),
}

/// Failure category, mapped to the process exit status.
enum Failure {
    Input(String),
    Solver(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Solver(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io(_) => Failure::Io(msg),
            Error::NumericBreakdown { .. }
            | Error::ExactNotConverged { .. }
            | Error::InfeasibleKernel(_) => Failure::Solver(msg),
            _ => Failure::Input(msg),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Files produced by a command, written only after all computation succeeded.
struct Artifacts {
    dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    fn new(params: &Params) -> Self {
        let dir = params
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"));
        let config = serde_json::to_vec_pretty(params).expect("params serialize");
        Self {
            dir,
            files: vec![(PathBuf::from("config.json"), config)],
        }
    }

    fn add(&mut self, name: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    fn write(self) -> Outcome<()> {
        let io = |p: &Path, e: std::io::Error| Failure::Io(format!("{}: {e}", p.display()));
        std::fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        for (name, bytes) in self.files {
            let path = self.dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

fn solver_config(p: &Params) -> SolverConfig {
    SolverConfig {
        epsilon: p.eps.unwrap_or(0.01),
        max_iterations: p.iterations.unwrap_or(5000),
        tolerance: p.tol.unwrap_or(1e-9),
        domain: p.domain.unwrap_or(srot::Domain::Auto),
        trace: p.trace.unwrap_or(false),
    }
}

fn sliced_config(p: &Params) -> SlicedConfig {
    SlicedConfig {
        projections: p.projections.unwrap_or(100),
        aggregation: p.aggregation.unwrap_or(srot::Aggregation::Uniform),
        softmin_temperature: p.temperature.unwrap_or(0.1),
        gamma: p.gamma.unwrap_or(1e-8),
        seed: p.seed.unwrap_or(0),
    }
}

fn uniform(n: usize) -> Array1<f64> {
    Array1::from_elem(n, 1.0 / n as f64)
}

/// Source and target measures from files or the synthetic generator.
fn load_measures(p: &Params) -> Outcome<(DiscreteMeasure, DiscreteMeasure)> {
    match (&p.source, &p.target) {
        (Some(s), Some(t)) => Ok((DiscreteMeasure::read(s)?, DiscreteMeasure::read(t)?)),
        (Some(_), None) | (None, Some(_)) => Err(Failure::Input(
            "--source and --target must be given together".into(),
        )),
        (None, None) => {
            let dataset = p
                .dataset
                .ok_or_else(|| Failure::Input("need --source/--target or --dataset".into()))?;
            Ok(bench::generate(
                dataset,
                p.n.unwrap_or(240),
                p.seed.unwrap_or(0),
            )?)
        }
    }
}

/// Measures carrying the weights of a bare cost matrix. Atoms are
/// placeholders, so only cost-based methods may use them.
fn weighted_placeholders(
    p: &Params,
    cost: &CostMatrix,
) -> Outcome<(DiscreteMeasure, DiscreteMeasure)> {
    let (n, m) = cost.shape();
    let weights = |given: &Option<Vec<f64>>, len: usize, side: &str| -> Outcome<Array1<f64>> {
        match given {
            Some(w) if w.len() != len => Err(Failure::Input(format!(
                "{side} weights have {} entries, cost matrix needs {len}",
                w.len()
            ))),
            Some(w) => Ok(Array1::from_vec(w.clone())),
            None => Ok(uniform(len)),
        }
    };
    let a = weights(&p.source_weights, n, "source")?;
    let b = weights(&p.target_weights, m, "target")?;
    Ok((
        DiscreteMeasure::new(Array2::zeros((n, 1)), a)?,
        DiscreteMeasure::new(Array2::zeros((m, 1)), b)?,
    ))
}

fn fmt_eps(method: Method, eps: f64) -> String {
    if method.is_regularized() {
        format!(" eps={eps}")
    } else {
        String::new()
    }
}

fn cmd_plan(p: &Params) -> Outcome<String> {
    let method = p.method.unwrap_or(Method::Srot);
    let (source, target, cost) = match &p.cost {
        Some(path) => {
            if matches!(method, Method::Sot | Method::Srot) {
                return Err(Failure::Input(format!(
                    "method {method} needs point clouds, not a cost matrix"
                )));
            }
            let cost = CostMatrix::read(path)?;
            let (s, t) = weighted_placeholders(p, &cost)?;
            (s, t, cost)
        }
        None => {
            let (s, t) = load_measures(p)?;
            let c = cost_matrix(&s, &t)?;
            (s, t, c)
        }
    };
    let solver = solver_config(p);
    let sliced = sliced_config(p);
    let result = compute_plan(method, &source, &target, &cost, &sliced, &solver)?;
    if p.strict == Some(true) && !result.converged {
        return Err(Failure::Solver(format!(
            "{method} did not reach tolerance {} within {} iterations",
            solver.tolerance, solver.max_iterations
        )));
    }
    let l1 = if method == Method::Exact {
        0.0
    } else {
        let exact = solve_exact(&cost, &source, &target)?;
        srot::l1_error(&result.plan, &exact.plan)?
    };
    let value = plan_cost(&cost, &result.plan)?;
    let mut out = Artifacts::new(p);
    out.add("plan.csv", result.plan.to_csv());
    if let Some(trace) = &result.trace {
        out.add("trace.csv", trace.to_csv());
    }
    if matches!(method, Method::Sot | Method::Srot) {
        let meta = SotMetadata::from(&sliced);
        out.add(
            "sot.json",
            serde_json::to_string_pretty(&meta).expect("metadata serializes"),
        );
    }
    out.write()?;
    Ok(format!(
        "method={method}{} cost={value} l1_vs_exact={l1} converged={} runtime_ms={:.3}",
        fmt_eps(method, solver.epsilon),
        result.converged,
        result.total_ms()
    ))
}

fn cmd_divergence(p: &Params) -> Outcome<String> {
    let (source, target) = load_measures(p)?;
    let objective = p.divergence.unwrap_or(FlowObjective::Srot);
    let regularizer = match objective {
        FlowObjective::Sinkhorn => Regularizer::Entropic,
        FlowObjective::Srot => Regularizer::Sliced,
        FlowObjective::Exact => {
            return Err(Failure::Input(
                "divergence supports sinkhorn or srot".into(),
            ));
        }
    };
    let solver = solver_config(p);
    let start = Instant::now();
    let eval = evaluate(
        &source,
        &target,
        euclidean_cost,
        regularizer,
        &sliced_config(p),
        &solver,
    )?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let r = eval.result;
    if p.strict == Some(true) && !r.converged {
        return Err(Failure::Solver(
            "divergence solves did not reach tolerance".into(),
        ));
    }
    let name = match regularizer {
        Regularizer::Entropic => "sinkhorn",
        Regularizer::Sliced => "srot",
    };
    let json = format!(
        "{{\n  \"divergence\": \"{name}\",\n  \"epsilon\": {},\n  \"value\": {},\n  \"cross_term\": {},\n  \"self_term_source\": {},\n  \"self_term_target\": {},\n  \"converged\": {}\n}}\n",
        solver.epsilon, r.value, r.cross_term, r.self_term_source, r.self_term_target, r.converged
    );
    let mut out = Artifacts::new(p);
    out.add("divergence.json", json);
    out.write()?;
    Ok(format!(
        "divergence={name} eps={} value={} converged={} runtime_ms={ms:.3}",
        solver.epsilon, r.value, r.converged
    ))
}

fn cmd_flow(p: &Params) -> Outcome<String> {
    let (initial, target) = if p.source.is_some() || p.target.is_some() {
        load_measures(p)?
    } else {
        gaussian_blobs(
            p.n.unwrap_or(50),
            p.separation.unwrap_or(3.0),
            p.spread.unwrap_or(0.5),
            p.seed.unwrap_or(0),
        )?
    };
    let config = FlowConfig {
        step_size: p.step_size.unwrap_or(0.05),
        steps: p.steps.unwrap_or(100),
        objective: p.divergence.unwrap_or(FlowObjective::Srot),
        solver: solver_config(p),
        sliced: sliced_config(p),
        evaluation_stride: p.stride.unwrap_or(1),
    };
    let start = Instant::now();
    let traj = run_flow(&initial, &target, &config)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    if let Some(step) = traj.aborted_at {
        return Err(Failure::Solver(format!("flow diverged at step {step}")));
    }
    if p.strict == Some(true) && !traj.unconverged_steps.is_empty() {
        return Err(Failure::Solver(format!(
            "{} flow steps missed the solver tolerance",
            traj.unconverged_steps.len()
        )));
    }
    let mut out = Artifacts::new(p);
    out.add("wasserstein.csv", traj.curve_csv());
    let weights = initial.weights().to_owned();
    for (step, _) in &traj.wasserstein {
        let m = DiscreteMeasure::new(traj.snapshots[*step].clone(), weights.clone())?;
        out.add(format!("snapshot_{step:05}.txt"), m.to_text());
    }
    out.write()?;
    let objective = match config.objective {
        FlowObjective::Sinkhorn => "sinkhorn",
        FlowObjective::Srot => "srot",
        FlowObjective::Exact => "exact",
    };
    Ok(format!(
        "flow divergence={objective} eps={} steps={} w_initial={} w_final={} runtime_ms={ms:.3}",
        config.solver.epsilon,
        config.steps,
        traj.initial_wasserstein().unwrap_or(f64::NAN),
        traj.final_wasserstein().unwrap_or(f64::NAN)
    ))
}

fn cmd_color_transfer(p: &Params) -> Outcome<String> {
    let (Some(src), Some(tgt)) = (&p.source_image, &p.target_image) else {
        return Err(Failure::Input(
            "need --source-image and --target-image".into(),
        ));
    };
    let source = srot::color::RgbImage::read(src)?;
    let target = srot::color::RgbImage::read(tgt)?;
    let method = p.method.unwrap_or(Method::Srot);
    let solver = solver_config(p);
    let r = run_color_transfer(
        &source,
        &target,
        method,
        p.palette.unwrap_or(256),
        &solver,
        &sliced_config(p),
    )?;
    if p.strict == Some(true) && !r.converged {
        return Err(Failure::Solver(
            "color transfer plan did not reach tolerance".into(),
        ));
    }
    let output = p
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("transfer.png"));
    let pair = p.pair_id.clone().unwrap_or_else(|| {
        src.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let eps = if method.is_regularized() {
        solver.epsilon.to_string()
    } else {
        String::new()
    };
    let diagnostics = format!(
        "pairId,method,epsilon,l1VsExact,runtimeMs\n{pair},{method},{eps},{},{}\n",
        r.l1_vs_exact, r.runtime_ms
    );
    let bytes = r.image.encode_for(&output)?;
    let mut out = Artifacts::new(p);
    out.add(&output, bytes);
    out.add("diagnostics.csv", diagnostics);
    out.write()?;
    Ok(format!(
        "method={method}{} l1_vs_exact={} converged={} runtime_ms={:.3}",
        fmt_eps(method, solver.epsilon),
        r.l1_vs_exact,
        r.converged,
        r.runtime_ms
    ))
}

fn cmd_bench(p: &Params) -> Outcome<String> {
    let axis = p.sweep.unwrap_or(bench::SweepAxis::Epsilon);
    let mut spec = match axis {
        bench::SweepAxis::Epsilon => SweepSpec::epsilon_sweep(),
        bench::SweepAxis::Iterations => SweepSpec::iteration_sweep(),
        bench::SweepAxis::Projections => SweepSpec::projection_sweep(),
    };
    let first = p.seed.unwrap_or(0);
    spec.seeds = (first..first + p.seeds.unwrap_or(5) as u64).collect();
    if let Some(n) = p.n {
        spec.n = n;
    }
    if let Some(d) = &p.datasets {
        spec.datasets = d.clone();
    }
    if let Some(m) = &p.methods {
        spec.methods = m.clone();
    }
    if let Some(r) = p.repetitions {
        spec.repetitions = r;
    }
    spec.tolerance = p.tol.unwrap_or(spec.tolerance);
    spec.domain = p.domain.unwrap_or(spec.domain);
    spec.gamma = p.gamma.unwrap_or(spec.gamma);
    // A single value on a non-swept axis replaces its default.
    if axis != bench::SweepAxis::Epsilon {
        if let Some(e) = p.eps {
            spec.epsilons = vec![e];
        }
    }
    if axis != bench::SweepAxis::Iterations {
        if let Some(t) = p.iterations {
            spec.iterations = vec![t];
        }
    }
    if axis != bench::SweepAxis::Projections {
        if let Some(l) = p.projections {
            spec.projections = vec![l];
        }
        if let Some(a) = p.aggregation {
            spec.aggregations = vec![a];
        }
    }
    let start = Instant::now();
    let records = bench::sweep(&spec)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let figure = p.figure.clone().unwrap_or_else(|| "bench".into());
    let mut out = Artifacts::new(p);
    out.add(format!("{figure}.csv"), bench::csv_bytes(&records)?);
    let mut seen: Vec<&str> = Vec::new();
    for r in &records {
        if !seen.contains(&r.dataset.as_str()) {
            seen.push(&r.dataset);
        }
    }
    for d in seen {
        out.add(
            format!("{figure}_{d}.svg"),
            bench::render_svg(&records, d, axis)?,
        );
    }
    out.write()?;
    let failed = records.iter().filter(|r| r.failed()).count();
    Ok(format!(
        "bench sweep={axis:?} records={} failed={failed} runtime_ms={ms:.3}",
        records.len()
    )
    .to_lowercase())
}

fn configure_threads() -> Outcome<()> {
    let Ok(v) = std::env::var("SROT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Input(format!(
            "SROT_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(e.to_string()))
}

fn run(cli: Cli) -> Outcome<Option<String>> {
    configure_threads()?;
    let (name, flags, handler): (&str, &Params, fn(&Params) -> Outcome<String>) = match &cli.command
    {
        Command::Plan(p) => ("plan", p, cmd_plan),
        Command::Divergence(p) => ("divergence", p, cmd_divergence),
        Command::Flow(p) => ("flow", p, cmd_flow),
        Command::ColorTransfer(p) => ("color-transfer", p, cmd_color_transfer),
        Command::Bench(p) => ("bench", p, cmd_bench),
    };
    let params = Params::resolve(name, flags)?;
    if flags.dump_config {
        let json = serde_json::to_string_pretty(&params).expect("params serialize");
        return Ok(Some(json));
    }
    handler(&params).map(Some)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Some(line)) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
