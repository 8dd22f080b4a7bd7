//! CSV and manifest output.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::experiment::MetricSeries;
use crate::error::{Error, Result};

/// Environment variable overriding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "NCWSS_OUTPUT_DIR";

pub const DEFAULT_OUTPUT_DIR: &str = "results";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Output directory: explicit flag, then the environment, then `results`.
pub fn resolve_output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// Column names: `slot`, then `<policy>_throughput`, `<policy>_regret` per policy.
pub fn csv_header(series: &MetricSeries) -> Vec<String> {
    let mut header = vec!["slot".to_string()];
    for p in &series.policies {
        header.push(format!("{p}_throughput"));
        header.push(format!("{p}_regret"));
    }
    header
}

/// Renders the per-slot series as CSV text.
pub fn render_csv(series: &MetricSeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Numerical(format!("csv encoding: {e}"));
    w.write_record(csv_header(series)).map_err(csv_err)?;
    for t in 0..series.horizon() {
        let mut row = Vec::with_capacity(1 + 2 * series.policies.len());
        row.push(t.to_string());
        for i in 0..series.policies.len() {
            let tp = series.mean_throughput[i][t];
            let rg = series.mean_regret[i][t];
            if !tp.is_finite() || !rg.is_finite() {
                return Err(Error::Numerical(format!("non-finite metric at slot {t}")));
            }
            row.push(tp.to_string());
            row.push(rg.to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Numerical(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.manifest.toml`, the latter
/// holding the complete resolved configuration.
pub fn emit_results(
    series: &MetricSeries,
    config: &ExperimentConfig,
    dir: &Path,
    name: &str,
) -> Result<EmittedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(format!("{name}.csv"));
    let manifest = dir.join(format!("{name}.manifest.toml"));
    fs::write(&csv, render_csv(series)?).map_err(|e| Error::io(&csv, e))?;
    fs::write(&manifest, config.to_toml_string()).map_err(|e| Error::io(&manifest, e))?;
    Ok(EmittedFiles { csv, manifest })
}
