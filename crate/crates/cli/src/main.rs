//! `uqcal`: runs the prevalence, renewal, surveillance and value-of-information
//! studies and writes CSV tables and SVG plots.

mod commands;
mod config;
mod error;
mod io;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uqcal::RandomSeed;

use crate::config::StudyConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "uqcal", version, about = "Expected uncertainty reduction studies for epidemic models")]
struct Cli {
    /// TOML file with `[global]` and per-command tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; every random stream is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replicate execution. Never changes any output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Beta-binomial prevalence posterior and EUR as a function of extra tests.
    Prevalence(PrevalenceArgs),
    /// R_t under perfect and under-reporting, and the EUR of full reporting.
    Renewal(RenewalArgs),
    /// Joint cases and wastewater study: daily UR and full-population EUR.
    Surveillance(SurveillanceArgs),
    /// EVSI, EVPI and EIG for the prevalence example.
    Voi(VoiArgs),
}

#[derive(Debug, Args)]
pub struct PrevalenceArgs {
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long)]
    pub tested: Option<u64>,
    #[arg(long)]
    pub positives: Option<u64>,
    /// Comma-separated numbers of additional tests.
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<u64>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Finite population size for the hypergeometric posterior.
    #[arg(long)]
    pub population: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RenewalArgs {
    /// `date,cases` CSV.
    #[arg(long)]
    pub cases: Option<PathBuf>,
    /// `lag,weight` CSV.
    #[arg(long)]
    pub serial_interval: Option<PathBuf>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub prior_shape: Option<f64>,
    #[arg(long)]
    pub prior_rate: Option<f64>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SurveillanceArgs {
    /// Simulate the cases and wastewater instead of reading them.
    #[arg(long)]
    pub simulate: bool,
    /// Simulate with every day sampled from the whole population.
    #[arg(long)]
    pub coverage_full: bool,
    /// `date,cases` CSV.
    #[arg(long)]
    pub cases: Option<PathBuf>,
    /// `date,concentration,catchment_population` CSV.
    #[arg(long)]
    pub wastewater: Option<PathBuf>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub sampled_days: Option<usize>,
    #[arg(long)]
    pub noise_base: Option<f64>,
    #[arg(long)]
    pub smoothing_lag: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VoiArgs {
    #[arg(long)]
    pub m: Option<u64>,
    /// Repeatable: quadratic, log, pinball:LEVEL or asymmetric:UNDER:OVER.
    #[arg(long = "loss")]
    pub losses: Option<Vec<String>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Case series for the Fisher-information table.
    #[arg(long)]
    pub cases: Option<PathBuf>,
    #[arg(long)]
    pub serial_interval: Option<PathBuf>,
}

/// Settings shared by every command.
pub struct Run {
    pub out: PathBuf,
    pub seed: RandomSeed,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut config = StudyConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.global.seed = seed;
    }
    if let Some(out) = cli.out {
        config.global.out = out;
    }
    let threads = cli.threads.or(config.global.threads);
    if threads == Some(0) {
        return Err(CliError::usage("--threads must be at least 1"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        pool = pool.num_threads(k);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    io::ensure_dir(&config.global.out)?;
    let ctx = Run {
        out: config.global.out.clone(),
        seed: RandomSeed::new(config.global.seed),
    };
    pool.install(|| match cli.command {
        Command::Prevalence(a) => commands::prevalence::run(&ctx, config.prevalence, a),
        Command::Renewal(a) => commands::renewal::run(&ctx, config.renewal, a),
        Command::Surveillance(a) => commands::surveillance::run(&ctx, config.surveillance, a),
        Command::Voi(a) => commands::voi::run(&ctx, config.voi, a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
