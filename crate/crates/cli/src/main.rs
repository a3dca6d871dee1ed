//! `ldp-freq`: run private frequency-estimation experiments from the shell.
//!
//! Subcommands mirror the harness entry points: `run` executes repeated
//! seeded trials for one mechanism, `sweep` re-runs across a list of
//! privacy budgets, and `bench` times the decoders on a fixed workload.
//! Exit codes: 0 on success, 2 for invalid configuration, 3 when parameter
//! derivation fails.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ldp_freq_core::error::Error;
use ldp_freq_core::harness::{
    bench_decode, bench_to_csv, results_to_csv, run_trials, sweep_epsilon, sweep_to_csv, to_json,
    Distribution, ExperimentConfig, MechanismKind, OutputFormat,
};

#[derive(Parser)]
#[command(name = "ldp-freq", version, about = "Locally private frequency estimation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated trials of one mechanism and report per-trial metrics.
    Run(RunArgs),
    /// Run a small experiment per epsilon and report the mean MSE of each.
    Sweep(SweepArgs),
    /// Time the decoders on a fixed count vector.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SharedArgs {
    /// Universe size k.
    #[arg(long)]
    k: u64,
    /// Number of users n per trial.
    #[arg(long)]
    n: u64,
    /// Base seed; all randomness derives from it.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Pin the field size q instead of deriving it.
    #[arg(long)]
    q: Option<u64>,
    /// Pin the dimension t instead of deriving it.
    #[arg(long)]
    t: Option<u32>,
    /// Pin the block count h (hybrid mechanisms).
    #[arg(long)]
    h: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Mechanism: pg, hpg, pirappor, rr, ss, pg-pub, hpg-pub.
    #[arg(long)]
    mechanism: String,
    /// Privacy budget epsilon.
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    shared: SharedArgs,
    /// Number of independent trials.
    #[arg(long, default_value_t = 300)]
    trials: u32,
    /// Input distribution: spike or zipf:<s>.
    #[arg(long, default_value = "spike")]
    dist: String,
    /// Use the public-coin variant of the mechanism.
    #[arg(long, default_value_t = false)]
    public_coin: bool,
    /// Seed for the shared public randomness; defaults to --seed.
    #[arg(long)]
    public_seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Mechanism: pg, hpg, pirappor, rr, ss, pg-pub, hpg-pub.
    #[arg(long)]
    mechanism: String,
    /// Comma-separated list of epsilon values.
    #[arg(long, value_delimiter = ',', required = true)]
    epsilons: Vec<f64>,
    #[command(flatten)]
    shared: SharedArgs,
    /// Trials per epsilon.
    #[arg(long, default_value_t = 10)]
    trials: u32,
    /// Input distribution: spike or zipf:<s>.
    #[arg(long, default_value = "spike")]
    dist: String,
    /// Use the public-coin variant of the mechanism.
    #[arg(long, default_value_t = false)]
    public_coin: bool,
    /// Seed for the shared public randomness; defaults to --seed.
    #[arg(long)]
    public_seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Privacy budget epsilon.
    #[arg(long)]
    epsilon: f64,
    #[command(flatten)]
    shared: SharedArgs,
    /// Field size for the hybrid decoder.
    #[arg(long, default_value_t = 5)]
    hpg_q: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Bench(args) => bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn build_config(
    mechanism: &str,
    epsilon: f64,
    shared: &SharedArgs,
    trials: u32,
    dist: &str,
    public_coin: bool,
    public_seed: Option<u64>,
) -> Result<ExperimentConfig, Error> {
    let mut mechanism: MechanismKind = mechanism.parse()?;
    if public_coin {
        mechanism = mechanism.public_coin()?;
    }
    let mut config = ExperimentConfig::new(mechanism, epsilon, shared.k, shared.n);
    config.trials = trials;
    config.distribution = dist.parse::<Distribution>()?;
    config.seed = shared.seed;
    config.public_seed = public_seed;
    config.q = shared.q;
    config.t = shared.t;
    config.h = shared.h;
    config.threads = shared.threads;
    config.format = shared.format.parse::<OutputFormat>()?;
    config.validate()?;
    Ok(config)
}

fn run(args: RunArgs) -> Result<(), Error> {
    let config = build_config(
        &args.mechanism,
        args.epsilon,
        &args.shared,
        args.trials,
        &args.dist,
        args.public_coin,
        args.public_seed,
    )?;
    let results = run_trials(&config)?;
    let rendered = match config.format {
        OutputFormat::Csv => results_to_csv(&results),
        OutputFormat::Json => to_json(&results),
    };
    emit(&args.shared.out, rendered)
}

fn sweep(args: SweepArgs) -> Result<(), Error> {
    let config = build_config(
        &args.mechanism,
        args.epsilons.first().copied().unwrap_or(1.0),
        &args.shared,
        args.trials,
        &args.dist,
        args.public_coin,
        args.public_seed,
    )?;
    let rows = sweep_epsilon(&config, &args.epsilons)?;
    let rendered = match config.format {
        OutputFormat::Csv => sweep_to_csv(&rows),
        OutputFormat::Json => to_json(&rows),
    };
    emit(&args.shared.out, rendered)
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let mut config = ExperimentConfig::new(MechanismKind::Pg, args.epsilon, args.shared.k, args.shared.n);
    config.seed = args.shared.seed;
    config.q = args.shared.q;
    config.t = args.shared.t;
    config.h = args.shared.h;
    config.hpg_q = Some(args.hpg_q);
    config.threads = args.shared.threads;
    config.format = args.shared.format.parse::<OutputFormat>()?;
    config.validate()?;
    let rows = bench_decode(&config)?;
    let rendered = match config.format {
        OutputFormat::Csv => bench_to_csv(&rows),
        OutputFormat::Json => to_json(&rows),
    };
    emit(&args.shared.out, rendered)
}

fn emit(out: &Option<PathBuf>, rendered: String) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, rendered)
            .map_err(|e| Error::InvalidConfig(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

/// 2 for configuration mistakes, 3 for parameter-derivation failures.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) => 2,
        Error::NonPrimeModulus(_)
        | Error::ModulusTooLarge(_)
        | Error::ParameterOverflow(_)
        | Error::NoFeasibleParams { .. } => 3,
        _ => 1,
    }
}
