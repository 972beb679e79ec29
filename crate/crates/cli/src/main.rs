mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Error caused by the invocation rather than the work (exit code 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser, Debug)]
#[command(name = "arrayopt", version, about = "Sparse planar array layouts: data generation, surrogate training, optimization, evaluation")]
pub struct Cli {
    /// Thread cap for dataset generation and optimization runs.
    #[arg(long, global = true, env = "ARRAYOPT_WORKERS", value_parser = clap::value_parser!(u16).range(1..))]
    workers: Option<u16>,

    /// Fixed-order reductions. Every code path already reduces in a fixed
    /// order, so this only documents intent in scripts.
    #[arg(long, global = true)]
    #[allow(dead_code)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled dataset of random sub-array compositions.
    GenData(GenDataArgs),
    /// Train a surrogate cost model on a dataset.
    Train(TrainArgs),
    /// Run surrogate-guided descent on the lowest-cost configurations.
    Optimize(OptimizeArgs),
    /// Pattern cuts and metrics of a single layout.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Aperture width along y, in wavelengths (tunable, no reference value).
    #[arg(long, default_value_t = 16.0)]
    pub width: f64,
    /// Aperture height along z, in wavelengths; defaults to the width.
    #[arg(long)]
    pub height: Option<f64>,
    /// Subdomain columns along y.
    #[arg(long, default_value_t = 2)]
    pub split_y: usize,
    /// Subdomain rows along z.
    #[arg(long, default_value_t = 2)]
    pub split_z: usize,
    /// Lattice period range in wavelengths, same for both lattice axes.
    #[arg(long, default_value_t = 0.5)]
    pub period_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub period_max: f64,
    /// Upper end of the lattice rotation range, in degrees.
    #[arg(long, default_value_t = 90.0)]
    pub rotation_max_deg: f64,
    /// Minimum distance kept across subdomain seams, in wavelengths.
    #[arg(long, default_value_t = 0.5)]
    pub seam: f64,
    /// Samples per u-axis of the labeling grid (odd; tunable, no reference value).
    #[arg(long, default_value_t = 257)]
    pub grid_samples: usize,
    /// Norm exponent of the cost.
    #[arg(long, default_value_t = 4)]
    pub p: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ArchArg {
    Fnn,
    SetTransformer,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub arch: ArchArg,
    #[arg(long)]
    pub data: PathBuf,
    /// Weights file; the sidecar goes next to it as `<out-model>.json`.
    #[arg(long)]
    pub out_model: PathBuf,
    /// Defaults to `<out-model>.metrics.json`.
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    /// Defaults to `<out-model>.loss.csv`.
    #[arg(long)]
    pub loss_out: Option<PathBuf>,
    /// Default 1000 for both architectures.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Default 1e-5 (fnn) or 1e-3 (set-transformer).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Default 128 (fnn) or 64 (set-transformer).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Seeds weight init, the held-out split and batch shuffling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of the dataset held out for validation; 0 trains on everything.
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
    /// Layer normalization inside the attention blocks (set-transformer only).
    #[arg(long)]
    pub layer_norm: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Hard,
    Penalty,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Expected model architecture; a mismatch is a usage error.
    #[arg(long, value_enum)]
    pub arch: Option<ArchArg>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub top_k: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Penalty)]
    pub mode: ModeArg,
    /// Barrier weight; defaults to 12.5 (fnn) or 1.0 (set-transformer).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Minimum element spacing in wavelengths.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    /// Adam step size on the coordinates (tunable, no reference value).
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Let elements leave the aperture.
    #[arg(long)]
    pub no_clamp: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub layout: PathBuf,
    /// Directory receiving `u_y.csv` and `u_z.csv`.
    #[arg(long)]
    pub cuts_out: Option<PathBuf>,
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    #[arg(long, default_value_t = 257)]
    pub grid_samples: usize,
    #[arg(long, default_value_t = 4)]
    pub p: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.map(usize::from);
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(a, workers),
        Command::Train(a) => commands::train(a),
        Command::Optimize(a) => commands::optimize(a, workers),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
