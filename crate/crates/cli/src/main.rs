//! `frontier-lab` command-line driver.
//!
//! Exit codes: 0 on success, 2 for invalid flags or configuration, 1 for
//! failures while running.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "frontier-lab", version, about = "Frontier-based coverage planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate random obstacle maps.
    GenMaps(GenMapsArgs),
    /// Run one coverage episode and write its trace.
    Rollout(RolloutArgs),
    /// Label baseline rollouts with the clairvoyant oracle.
    Dataset(DatasetArgs),
    /// Train the future-return network on a dataset.
    Train(TrainArgs),
    /// Run a paired benchmark suite.
    Bench(BenchArgs),
    /// Render an episode trace as PPM frames.
    Render(RenderArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    /// Map side length L.
    #[arg(long, default_value_t = 50)]
    pub size: usize,
    /// Target occupied fraction.
    #[arg(long, default_value_t = 0.15)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct HeuristicArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Side of the local window fed to the network.
    #[arg(long, default_value_t = 40)]
    pub state_d: usize,
    /// Oracle look-ahead T.
    #[arg(long, default_value_t = 1)]
    pub lookahead: usize,
    /// Weights file for H3.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Take H3 straight from the clairvoyant oracle instead of a network.
    #[arg(long)]
    pub oracle_h3: bool,
}

#[derive(Args, Debug)]
pub struct GenMapsArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Number of maps.
    #[arg(long, default_value_t = 1)]
    pub maps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RolloutArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Read the map from a file instead of generating it.
    #[arg(long)]
    pub map_file: Option<PathBuf>,
    #[command(flatten)]
    pub heuristic: HeuristicArgs,
    /// Episode seed (frontier sampling).
    #[arg(long, default_value_t = 0)]
    pub episode_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Number of maps to generate.
    #[arg(long, default_value_t = 10)]
    pub maps: usize,
    /// Use the maps in this directory (from `gen-maps`) instead.
    #[arg(long)]
    pub map_dir: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 40)]
    pub state_d: usize,
    #[arg(long, default_value_t = 1)]
    pub lookahead: usize,
    /// Record every n-th planning step.
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    #[arg(long)]
    pub max_records_per_map: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset file written by `dataset`.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Map sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub size: Vec<usize>,
    #[arg(long, default_value_t = 0.15)]
    pub density: f64,
    /// Suite seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maps per size (N_M).
    #[arg(long, default_value_t = 10)]
    pub maps: usize,
    /// Episodes per map (N_E).
    #[arg(long, default_value_t = 5)]
    pub episodes: usize,
    /// `NAME=ALPHA:BETA:GAMMA:DELTA`, repeatable; the first is the baseline.
    #[arg(long = "variant")]
    pub variants: Vec<String>,
    #[arg(long, default_value_t = 40)]
    pub state_d: usize,
    #[arg(long, default_value_t = 1)]
    pub lookahead: usize,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub oracle_h3: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub map_file: PathBuf,
    /// Pixels per cell.
    #[arg(long, default_value_t = 1)]
    pub scale: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("FRONTIER_LAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| frontier_lab::Error::Config(format!("FRONTIER_LAB_THREADS={v} is not a count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::GenMaps(a) => commands::gen_maps(&a),
        Command::Rollout(a) => commands::rollout(&a),
        Command::Dataset(a) => commands::dataset(&a),
        Command::Train(a) => commands::train(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Render(a) => render::render(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = matches!(e.downcast_ref::<frontier_lab::Error>(), Some(frontier_lab::Error::Config(_)));
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}
