//! `ncrhok`: generate graphs, simulate attacks, train and run the curve
//! predictor from the shell.
//!
//! Data and tables go to stdout, diagnostics to stderr. Exit codes: 0 ok,
//! 2 usage or input error, 3 shape or configuration error, 4 numeric failure.

mod commands;
mod overlay;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use ncrhok::controllability::AttackKind;
use ncrhok::error::ErrorKind;
use ncrhok::models::{HgnnVariant, NeighborMode};
use ncrhok::netgen::Topology;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(ncrhok::Error),
}

impl From<ncrhok::Error> for CliError {
    fn from(e: ncrhok::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Shape => 3,
                ErrorKind::Numeric => 4,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => e.fmt(f),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ncrhok", version, about = "Network controllability robustness toolkit")]
pub struct Cli {
    /// Worker threads for parallel stages (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// File of key=value lines supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic graphs as edge lists plus a manifest.
    Generate(GenerateArgs),
    /// Simulate an attack on one graph or on a generated directory.
    Simulate(SimulateArgs),
    /// Fit the betweenness surrogate on a dataset.
    PretrainBc(PretrainArgs),
    /// Train the curve predictor on a dataset.
    Train(TrainArgs),
    /// Predict robustness curves with a trained model.
    Predict(PredictArgs),
    /// Score predicted curves against simulated ones.
    Eval(EvalArgs),
    /// Time attack simulation against model prediction.
    Bench(BenchArgs),
}

/// Seed used when neither a flag nor the config file sets one.
#[derive(Debug, Args)]
pub struct SeedArg {
    /// Random seed (falls back to NCRHOK_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub topology: Topology,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k_avg: f64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = ncrhok::netgen::GenSpec::DEFAULT_SF_BETA)]
    pub sf_beta: f64,
    #[arg(long, default_value_t = ncrhok::netgen::GenSpec::DEFAULT_SF_THETA)]
    pub sf_theta: f64,
    #[arg(long, default_value_t = 1)]
    pub qsn_rq: usize,
    /// Fixed snapback probability instead of one solved from the degree.
    #[arg(long)]
    pub qsn_q: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// An edge-list file, or a directory written by `generate`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub attack: AttackKind,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Random attack orders averaged per graph.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Rank targets once on the intact graph instead of after every removal.
    #[arg(long)]
    pub no_recompute: bool,
    /// Curve CSV for a single graph (default stdout); dataset directory for
    /// a generated directory (default: the input directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Optimizer settings; unset values take the library defaults.
#[derive(Debug, Args)]
pub struct OptimArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub decay_every: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Training log CSV (epoch, batch, loss, validation error).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Surrogate parameter file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value = "symmetric")]
    pub neighbors: NeighborMode,
    #[arg(long)]
    pub self_loops: bool,
    #[command(flatten)]
    pub optim: OptimArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Surrogate file from `pretrain-bc`; without it the centrality feature is off.
    #[arg(long)]
    pub bc: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of records held out for checkpoint selection.
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long, default_value_t = 16)]
    pub d_feat: usize,
    #[arg(long, default_value_t = 64)]
    pub d_model: usize,
    #[arg(long, default_value_t = 1)]
    pub gat_heads: usize,
    #[arg(long, default_value_t = ncrhok::hypergraph::DEFAULT_K_HOP)]
    pub k_hop: usize,
    #[arg(long, default_value_t = ncrhok::hypergraph::DEFAULT_K_NN)]
    pub k_nn: usize,
    #[arg(long, default_value_t = 512)]
    pub mlp_hidden: usize,
    /// Hypergraph streams: dual, khop or none.
    #[arg(long, default_value = "dual")]
    pub hgnn: HgnnVariant,
    #[command(flatten)]
    pub optim: OptimArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["graph", "data"]))]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One edge-list file.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Every record of a dataset directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Graphs per forward pass.
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Curve CSV to write (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted curves, as written by `predict`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Simulated curves with topology, k_avg and attack metadata.
    #[arg(long)]
    pub truth: PathBuf,
    /// Report CSV to write (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Timed passes; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Use only the first this many records.
    #[arg(long)]
    pub limit: Option<usize>,
}

fn parse() -> Cli {
    let cmd = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let args = match overlay::expand(&cmd, std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    let matches = cmd.try_get_matches_from(args).unwrap_or_else(|e| e.exit());
    Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot set up {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
