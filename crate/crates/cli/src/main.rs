use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use iabsim_cli::{presets, run, CliError, Overrides, WORKERS_ENV};

/// Monte Carlo service-coverage simulator for RIS/NCR-assisted IAB networks.
#[derive(Debug, Parser)]
#[command(name = "iabsim", version)]
struct Args {
    /// Scenario file (TOML), or a previous result/manifest file to rerun.
    #[arg(long, required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    trials: Option<usize>,
    /// Sweep axis: tree_depth, ue_count, rain_rate, main_lobe_gain, carrier_frequency or psi.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Comma-separated variants: direct, ris, ncr.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    /// Result table path; printed to stdout when absent.
    #[arg(long)]
    output: Option<String>,
    /// Print a scenario template (fig2, fig3, fig4, fig5) and exit.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Log level: error, warn, info, debug or trace.
    #[arg(long, default_value = "warn")]
    log_level: log::LevelFilter,
}

fn workers() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn main_inner(args: Args) -> Result<(), CliError> {
    if let Some(name) = &args.preset {
        let text = presets::get(name).ok_or_else(|| {
            CliError::Config(format!("unknown preset `{name}` (expected one of {})", presets::NAMES.join(", ")))
        })?;
        print!("{text}");
        return Ok(());
    }
    let config = args.config.expect("clap enforces --config without --preset");
    let overrides = Overrides {
        seed: args.seed,
        trials: args.trials,
        sweep: args.sweep,
        values: args.values,
        variants: args.variants,
        output: args.output,
    };
    let workers = workers()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Invariant(format!("cannot start {workers} workers: {e}")))?;
    let outcome = pool.install(|| run(&config, &overrides, workers))?;
    match &outcome.output {
        Some(path) => log::info!("wrote {}", path.display()),
        None => print!("{}", outcome.table),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new().filter_level(args.log_level).init();
    match main_inner(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
