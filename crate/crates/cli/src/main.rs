//! Command-line front end for the henochromatic verification pipelines.
//!
//! Every subcommand writes JSON (and where useful CSV) into the output
//! directory. Exit status: 0 when every check passes, 1 when a tolerance is
//! breached, 2 for usage or configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Breach(String),
}

impl From<henochromatic::Error> for CliError {
    fn from(e: henochromatic::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "henochromatic", version)]
#[command(about = "Checks on exact free-space states built from paraxial beam modes")]
struct Cli {
    /// JSON run configuration; unspecified fields keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized inputs (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override a configuration value, e.g. `--set grid.n=256`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample modes on the grid; write the first as CSV and the Gram matrix as JSON
    Modes(ModesArgs),
    /// Sweep the unitarity weight and wave-equation residual of a dispersion map
    Maps(MapsArgs),
    /// Scan the unitary family for the consistent member
    Uniqueness(UniquenessArgs),
    /// Compare quantum and paraxial Gram matrices of mode pairs
    Unitarity(UnitarityArgs),
    /// Synthesize random comb spectra in null coordinates and decompose them again
    Roundtrip(RoundtripArgs),
    /// Compare a henochromatic pulse with its paraxial counterpart
    Pulse(PulseArgs),
    /// Synthesize a spacetime field and dump its stations
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    /// Mode strings `hg:m,n:W:k` or `lg:l,p:W:k`; the first is dumped.
    #[arg(required = true)]
    pub modes: Vec<String>,
}

#[derive(Debug, Args)]
pub struct MapsArgs {
    /// `pa`, `mc`, `ip`, `hc` or `family:alpha,beta`.
    pub map: String,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Upper end of the transverse sweep.
    #[arg(long = "q-max", default_value_t = 0.9)]
    pub q_max: f64,
}

#[derive(Debug, Args)]
pub struct UniquenessArgs {
    /// `min,max,count`
    #[arg(long, default_value = "0,1.4,15")]
    pub alpha: String,
    /// `min,max,count`
    #[arg(long, default_value = "0.5,1.5,15")]
    pub beta: String,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
}

#[derive(Debug, Args)]
pub struct UnitarityArgs {
    /// Two space-separated mode strings on the same carrier; repeatable.
    /// Without any, five random Hermite-Gauss pairs are drawn from the seed.
    #[arg(long = "pair")]
    pub pairs: Vec<String>,
    #[arg(long, default_value = "hc")]
    pub map: String,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    /// Null coordinate `v` of the sampled slice.
    #[arg(long, default_value_t = 2.5)]
    pub v: f64,
}

#[derive(Debug, Args)]
pub struct PulseArgs {
    #[arg(long, default_value = "hg:0,0:40:1")]
    pub mode: String,
    /// Spectral width of the pulse, below a tenth of the carrier.
    #[arg(long, default_value_t = 1e-3)]
    pub sigma: f64,
    /// Transverse window; defaults to 16 waists.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Number of `u` samples over `[-2/sigma, 2/sigma]`.
    #[arg(long = "u-points", default_value_t = 41)]
    pub u_points: usize,
    /// Comma-separated times for the null-plane and time-resolved checks.
    #[arg(long, default_value = "0,500,1000")]
    pub times: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "hg:0,0:1:1")]
    pub mode: String,
    #[arg(long, default_value = "hc")]
    pub map: String,
    /// `start,stop,count`
    #[arg(long, default_value = "0,1,3")]
    pub z: String,
    /// `start,stop,count`
    #[arg(long, default_value = "0,1,3")]
    pub t: String,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    match cli.command {
        Command::Modes(a) => commands::modes(&cfg, &a),
        Command::Maps(a) => commands::maps(&cfg, &a),
        Command::Uniqueness(a) => commands::uniqueness(&cfg, &a),
        Command::Unitarity(a) => commands::unitarity(&cfg, &a),
        Command::Roundtrip(a) => commands::roundtrip(&cfg, &a),
        Command::Pulse(a) => commands::pulse(&cfg, &a),
        Command::Synth(a) => commands::synth(&cfg, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Breach(msg)) => {
            eprintln!("tolerance breached: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
