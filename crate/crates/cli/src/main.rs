use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use riesz_cli::{load_config, output_dir, run_experiment, Mode, RunError};

#[derive(Parser)]
#[command(name = "riesz", version, about = "Hypersingular Riesz gas experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the confined or periodic energy
    Minimize(Common),
    /// Run Metropolis chains for the Gibbs measure
    Sample(Common),
    /// Evaluate lattice zeta sums
    Zeta(Common),
    /// Estimate the asymptotic energy constant over a list of N
    Csd(Common),
    /// Solve for the limiting equilibrium density
    LimitMeasure(Common),
    /// Two-point correlation and energy estimate from chain archives
    Correlate(Common),
    /// Gap statistics of a one-dimensional minimizer
    CrystalCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file, or a manifest.json from an earlier run
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configuration's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Command::Minimize(c) => (Mode::Minimize, c),
            Command::Sample(c) => (Mode::Sample, c),
            Command::Zeta(c) => (Mode::Zeta, c),
            Command::Csd(c) => (Mode::Csd, c),
            Command::LimitMeasure(c) => (Mode::LimitMeasure, c),
            Command::Correlate(c) => (Mode::Correlate, c),
            Command::CrystalCheck(c) => (Mode::CrystalCheck, c),
        }
    }
}

fn run(mode: Mode, args: Common) -> Result<(), RunError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Other(e.to_string()))?;
    }
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Other(format!("{}: {e}", args.config.display())))?;
    let config = load_config(&text, Some(mode), args.seed)?;
    let out = output_dir(&config, args.out);
    let outcome = run_experiment(&config, &out)?;
    for line in outcome.summary {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RIESZ_LOG", "warn")).init();
    let (mode, args) = Cli::parse().command.split();
    match run(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
