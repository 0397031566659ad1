//! Command-line front end: scenario files, sweeps and result tables.

pub mod config;
pub mod output;
pub mod presets;

use std::path::{Path, PathBuf};
use std::time::Instant;

use iabsim::montecarlo::{estimate_coverage, run_sweep, Scenario, SweepRow};

pub use config::{parse_and_validate, parse_str, ConfigDocument, LoadedConfig, Overrides};
pub use output::{render_table, ResultRow};

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "IABSIM_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl From<iabsim::Error> for CliError {
    fn from(err: iabsim::Error) -> Self {
        match err {
            iabsim::Error::DimensionMismatch(msg) => CliError::Invariant(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Runs every `(value, variant)` point of a loaded configuration.
pub fn execute(loaded: &LoadedConfig) -> Result<Vec<ResultRow>, CliError> {
    let rows: Vec<SweepRow> = match &loaded.sweep {
        Some((axis, values)) => run_sweep(&loaded.scenario, *axis, values, &loaded.variants)?,
        None => loaded
            .variants
            .iter()
            .map(|&variant| {
                let scenario = Scenario {
                    variant,
                    ..loaded.scenario.clone()
                };
                Ok(SweepRow {
                    value: f64::NAN,
                    variant,
                    estimate: estimate_coverage(&scenario)?,
                })
            })
            .collect::<Result<_, iabsim::Error>>()?,
    };
    let axis = loaded.sweep.as_ref().map(|(a, _)| a.name()).unwrap_or("none");
    let rows: Vec<ResultRow> = rows.into_iter().map(|r| ResultRow::new(axis, r)).collect();
    for row in &rows {
        row.check(loaded.scenario.ue_count, loaded.sweep.as_ref().map(|(a, _)| *a))?;
    }
    Ok(rows)
}

/// Outcome of [`run`].
#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub table: String,
    pub output: Option<PathBuf>,
}

/// Loads, runs and writes one configuration. The table goes to the output
/// path (atomically, with a sidecar manifest) or is returned for printing.
pub fn run(config_path: &Path, overrides: &Overrides, workers: usize) -> Result<RunOutcome, CliError> {
    let loaded = parse_and_validate(config_path, overrides)?;
    log::info!(
        "scenario: {}; {} trials, seed {}",
        iabsim::montecarlo::describe(&loaded.scenario.infrastructure),
        loaded.scenario.trials,
        loaded.scenario.seed
    );
    let started = Instant::now();
    let rows = execute(&loaded)?;
    let elapsed = started.elapsed().as_secs_f64();
    log::info!("{} rows in {elapsed:.2} s", rows.len());
    let table = render_table(&loaded, overrides, &rows);
    let output = loaded.document.output.as_ref().map(|o| PathBuf::from(&o.path));
    if let Some(path) = &output {
        output::write_atomic(path, &table)?;
        let manifest = output::render_manifest(&loaded, overrides, elapsed, workers);
        output::write_atomic(&output::manifest_path(path), &manifest)?;
    }
    Ok(RunOutcome { rows, table, output })
}
