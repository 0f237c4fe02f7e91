//! Run parameters shared by flags and the JSON config file.
//!
//! Every flag has a key of the same name in the config file. Values given on
//! the command line override the file; anything left unset takes the
//! defaults below.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use srot::bench::{Dataset, SweepAxis};
use srot::flow::FlowObjective;
use srot::{Aggregation, Domain, Error, Method, Result};

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    /// JSON file with parameters; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    #[serde(skip)]
    pub dump_config: bool,

    /// Subcommand this configuration belongs to (config files only).
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// Directory receiving every output file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,

    /// Synthetic dataset used when no input files are given.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<Dataset>,

    /// Points per synthetic cloud.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Source measure file ("n d" header, then "w x1 .. xd" per line).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<PathBuf>,

    /// Target measure file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<PathBuf>,

    /// Cost matrix CSV ("n,m" header); replaces point clouds for exact and eot.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<PathBuf>,

    /// Source weights for --cost, comma separated (default uniform).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_weights: Option<Vec<f64>>,

    /// Target weights for --cost, comma separated (default uniform).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_weights: Option<Vec<f64>>,

    /// Regularization strength ε.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,

    /// Sinkhorn iteration cap.
    #[arg(long = "T")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,

    /// Sinkhorn marginal tolerance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,

    /// Number of projections.
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub projections: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<Aggregation>,

    /// Softmin temperature.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,

    /// Weight of the independent coupling mixed into the sliced reference.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,

    /// Treat hitting the iteration cap as a failure (exit 3).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,

    /// Write the per-iteration solver trace.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<bool>,

    /// Divergence driving `divergence` and `flow`: sinkhorn, srot or exact.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<FlowObjective>,

    /// Flow step size η.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,

    /// Number of flow steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,

    /// Evaluate the exact distance every this many flow steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,

    /// Distance between the synthetic flow blobs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,

    /// Standard deviation of the synthetic flow blobs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,

    /// Image to recolor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_image: Option<PathBuf>,

    /// Image providing the colors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_image: Option<PathBuf>,

    /// Output image name inside --out-dir (.png or .ppm).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,

    /// Palette size K.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub palette: Option<usize>,

    /// Identifier of the image pair in the diagnostics CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,

    /// Benchmark sweep axis: epsilon, iterations or projections.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxis>,

    /// Benchmark datasets, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datasets: Option<Vec<Dataset>>,

    /// Benchmark methods, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,

    /// Number of benchmark seeds, starting at --seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,

    /// Timing repetitions per benchmark cell.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,

    /// Output file stem for benchmark artifacts.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl Params {
    /// Fields set in `flags` replace those in `self`.
    pub fn overlay(&mut self, flags: &Params) {
        overlay!(
            self,
            flags,
            out_dir,
            method,
            dataset,
            n,
            seed,
            source,
            target,
            cost,
            source_weights,
            target_weights,
            eps,
            iterations,
            tol,
            domain,
            projections,
            aggregation,
            temperature,
            gamma,
            strict,
            trace,
            divergence,
            step_size,
            steps,
            stride,
            separation,
            spread,
            source_image,
            target_image,
            output,
            palette,
            pair_id,
            sweep,
            datasets,
            methods,
            seeds,
            repetitions,
            figure,
        );
    }

    pub fn load(path: &Path) -> Result<Params> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Reads the config file (if any), applies flags on top and fills defaults.
    pub fn resolve(command: &str, flags: &Params) -> Result<Params> {
        let mut p = match &flags.config {
            Some(path) => Params::load(path)?,
            None => Params::default(),
        };
        if let Some(c) = &p.command {
            if c != command {
                return Err(Error::InvalidInput(format!(
                    "config file is for `{c}`, not `{command}`"
                )));
            }
        }
        p.overlay(flags);
        p.command = Some(command.to_string());
        p.fill_defaults(command);
        Ok(p)
    }

    fn fill_defaults(&mut self, command: &str) {
        fn or<T>(slot: &mut Option<T>, v: T) {
            slot.get_or_insert(v);
        }
        or(&mut self.out_dir, PathBuf::from("out"));
        or(&mut self.seed, 0);
        or(&mut self.tol, 1e-9);
        or(&mut self.domain, Domain::Auto);
        or(&mut self.projections, 100);
        or(&mut self.aggregation, Aggregation::Uniform);
        or(&mut self.temperature, 0.1);
        or(&mut self.gamma, 1e-8);
        or(&mut self.strict, false);
        or(&mut self.trace, false);
        or(&mut self.iterations, 5000);
        match command {
            "plan" => {
                or(&mut self.method, Method::Srot);
                or(&mut self.eps, 1e-3);
                self.fill_dataset(240);
            }
            "divergence" => {
                or(&mut self.divergence, FlowObjective::Srot);
                or(&mut self.eps, 0.1);
                self.fill_dataset(100);
            }
            "flow" => {
                or(&mut self.divergence, FlowObjective::Srot);
                or(&mut self.eps, 0.5);
                or(&mut self.step_size, 0.05);
                or(&mut self.steps, 100);
                or(&mut self.stride, 1);
                if self.source.is_none() {
                    or(&mut self.n, 50);
                    or(&mut self.separation, 3.0);
                    or(&mut self.spread, 0.5);
                }
            }
            "color-transfer" => {
                or(&mut self.method, Method::Srot);
                or(&mut self.eps, 1e-2);
                or(&mut self.palette, 256);
                or(&mut self.output, PathBuf::from("transfer.png"));
            }
            "bench" => {
                let axis = *self.sweep.get_or_insert(SweepAxis::Epsilon);
                or(&mut self.n, 240);
                or(&mut self.seeds, 5);
                or(&mut self.repetitions, 3);
                or(&mut self.datasets, Dataset::ALL.to_vec());
                let methods = if axis == SweepAxis::Projections {
                    vec![Method::Srot]
                } else {
                    vec![Method::Eot, Method::Srot]
                };
                or(&mut self.methods, methods);
                let figure = match axis {
                    SweepAxis::Epsilon => "fig2_eps",
                    SweepAxis::Iterations => "fig2_T",
                    SweepAxis::Projections => "fig3",
                };
                or(&mut self.figure, figure.to_string());
            }
            _ => {}
        }
    }

    fn fill_dataset(&mut self, n: usize) {
        if self.source.is_none() && self.cost.is_none() {
            self.dataset.get_or_insert(Dataset::HalfMoons);
            self.n.get_or_insert(n);
        }
    }
}
