use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uavtilt::config::{parse_weight_list, ExperimentConfig, Preset};
use uavtilt::harness::{generate_scenario, run_experiment};
use uavtilt::report::emit_reports;
use uavtilt::{Error, Result};

#[derive(Parser)]
#[command(
    name = "uavtilt",
    version,
    about = "Q-learning downtilt optimization for a cellular-connected UAV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo experiment and write CSV/JSON reports.
    Simulate(SimulateArgs),
    /// Print one generated scenario as JSON.
    InspectScenario(InspectArgs),
}

#[derive(Args)]
struct Source {
    /// JSON config; merged over the preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in base configuration.
    #[arg(long)]
    preset: Option<Preset>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma-separated `w_rate:w_rsrp` pairs, e.g. `0:1,1:0`.
    #[arg(long)]
    weights: Option<String>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 0)]
    index: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load(source: &Source) -> Result<ExperimentConfig> {
    let base = source.preset.unwrap_or(Preset::Paper).source();
    match &source.config {
        Some(path) => ExperimentConfig::merged(base, &read(path)?),
        None => ExperimentConfig::from_json(base),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut config = load(&args.source)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(n) = args.realizations {
        config.n_realizations = n;
    }
    if let Some(w) = &args.weights {
        config.weight_vectors = parse_weight_list(w)?;
    }
    config.validate()?;
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_experiment(&config, threads)?;
    for path in emit_reports(&report, &config, &args.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    let config = load(&args.source)?;
    let scenario = generate_scenario(&config, args.index);
    let text = serde_json::to_string_pretty(&scenario).map_err(|e| Error::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::InspectScenario(a) => inspect(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
