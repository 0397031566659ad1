//! Result tables and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use iabsim::montecarlo::{SweepAxis, SweepRow, Variant};

use crate::config::{LoadedConfig, Overrides, EMBEDDED_CONFIG_MARKER};
use crate::CliError;

pub const COLUMNS: [&str; 9] = [
    "axis",
    "value",
    "variant",
    "rho_hat",
    "ci_low",
    "ci_high",
    "trials",
    "ue_samples",
    "mean_rate_bps",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis: &'static str,
    pub value: f64,
    pub variant: Variant,
    pub rho_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub ue_samples: usize,
    pub mean_rate_bps: f64,
}

impl ResultRow {
    pub fn new(axis: &'static str, row: SweepRow) -> Self {
        let e = row.estimate;
        ResultRow {
            axis,
            value: row.value,
            variant: row.variant,
            rho_hat: e.rho_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            trials: e.trials,
            ue_samples: e.ue_samples,
            mean_rate_bps: e.mean_rate_bps,
        }
    }

    /// Sanity checks every row must pass before it is written.
    pub fn check(&self, ue_count: usize, axis: Option<SweepAxis>) -> Result<(), CliError> {
        let ordered = 0.0 <= self.ci_low && self.ci_low <= self.rho_hat && self.rho_hat <= self.ci_high && self.ci_high <= 1.0;
        if !ordered {
            return Err(CliError::Invariant(format!(
                "interval [{}, {}] does not bracket rho {} for {} at {}",
                self.ci_low, self.ci_high, self.rho_hat, self.variant, self.value
            )));
        }
        if !(self.mean_rate_bps.is_finite() && self.mean_rate_bps >= 0.0) {
            return Err(CliError::Invariant(format!("mean rate {} is not a finite rate", self.mean_rate_bps)));
        }
        let expected_ues = match axis {
            Some(SweepAxis::UeCount) => self.value as usize,
            _ => ue_count,
        };
        if self.ue_samples != self.trials * expected_ues {
            return Err(CliError::Invariant(format!(
                "{} UE samples from {} trials of {expected_ues} UEs",
                self.ue_samples, self.trials
            )));
        }
        Ok(())
    }

    fn fields(&self) -> [String; 9] {
        [
            self.axis.to_string(),
            if self.value.is_nan() {
                String::new()
            } else {
                format!("{:.4}", self.value)
            },
            self.variant.name().to_string(),
            format!("{:.6}", self.rho_hat),
            format!("{:.6}", self.ci_low),
            format!("{:.6}", self.ci_high),
            self.trials.to_string(),
            self.ue_samples.to_string(),
            format!("{:.1}", self.mean_rate_bps),
        ]
    }
}

fn commented(text: &str) -> String {
    text.lines()
        .map(|l| if l.is_empty() { "#\n".to_string() } else { format!("# {l}\n") })
        .collect()
}

fn overrides_line(overrides: &Overrides) -> String {
    let flags = overrides.describe();
    if flags.is_empty() {
        "none".to_string()
    } else {
        flags.join(" ")
    }
}

/// Result table: `#` manifest header (version, seed, overrides, resolved
/// configuration) followed by CSV rows. Contains nothing run-dependent, so
/// equal inputs give byte-identical tables.
pub fn render_table(loaded: &LoadedConfig, overrides: &Overrides, rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# iabsim {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("# seed: {}\n", loaded.scenario.seed));
    out.push_str(&format!("# overrides: {}\n", overrides_line(overrides)));
    out.push_str(EMBEDDED_CONFIG_MARKER);
    out.push('\n');
    out.push_str(&commented(&loaded.resolved_toml()));

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(COLUMNS).expect("in-memory write");
    for row in rows {
        writer.write_record(row.fields()).expect("in-memory write");
    }
    let body = writer.into_inner().expect("in-memory flush");
    out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    out
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    output.with_file_name(name)
}

/// Sidecar manifest: the resolved configuration as a runnable TOML file,
/// preceded by comments with the run's version, wall time and overrides.
pub fn render_manifest(loaded: &LoadedConfig, overrides: &Overrides, wall_time_s: f64, workers: usize) -> String {
    let mut out = String::new();
    out.push_str(&format!("# iabsim {} run manifest\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("# wall_time_seconds: {wall_time_s:.3}\n"));
    out.push_str(&format!("# workers: {workers}\n"));
    out.push_str(&format!("# overrides: {}\n", overrides_line(overrides)));
    out.push_str(&loaded.resolved_toml());
    out
}

/// Writes through a temporary file in the target directory, so the target
/// either keeps its old contents or holds the complete new ones.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |context: String| move |source| CliError::Io { context, source };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(format!("cannot create a file in `{}`", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .map_err(io(format!("cannot write `{}`", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io {
            context: format!("cannot replace `{}`", path.display()),
            source: e.error,
        })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(manifest_path(Path::new("out/r.csv")), PathBuf::from("out/r.csv.manifest.toml"));
    }

    #[test]
    fn atomic_write_reports_missing_directory() {
        let err = write_atomic(Path::new("/nonexistent-dir/x.csv"), "a").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
