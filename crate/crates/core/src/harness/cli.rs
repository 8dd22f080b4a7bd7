//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::ExperimentConfig;
use super::experiment::run_experiment;
use super::output::{emit_results, resolve_output_dir};
use crate::error::{Error, Result};
use crate::selection::exploration_threshold;

#[derive(Debug, Parser)]
#[command(
    name = "ncwss",
    about = "Non-contiguous wideband spectrum sensing simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its CSV and manifest.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat an experiment over several values of one parameter.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Base configuration; defaults to the built-in Case 1 setup.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check a configuration without running it.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print the exploration threshold.
    Theorem1 {
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        delta: f64,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Override any config field.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Stem of the output files; defaults to the config file stem.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepParam {
    #[value(name = "K")]
    K,
    #[value(name = "N")]
    N,
    #[value(name = "SNR")]
    Snr,
    #[value(name = "L")]
    L,
}

impl SweepParam {
    fn field(self) -> &'static str {
        match self {
            SweepParam::K => "k_branches",
            SweepParam::N => "n_bands",
            SweepParam::Snr => "snr_db",
            SweepParam::L => "exploration_coefficient",
        }
    }

    fn label(self) -> &'static str {
        match self {
            SweepParam::K => "K",
            SweepParam::N => "N",
            SweepParam::Snr => "SNR",
            SweepParam::L => "L",
        }
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, sets: &[String]) -> Result<()> {
    for item in sets {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::usage(format!("expected KEY=VALUE, got `{item}`")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    Ok(())
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        apply_overrides(cfg, &self.set)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.replications {
            cfg.replications = r;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        Ok(())
    }
}

fn stem(path: Option<&Path>, name: Option<&str>) -> String {
    name.map(str::to_string)
        .or_else(|| {
            path.and_then(Path::file_stem)
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "experiment".to_string())
}

fn execute(cfg: &ExperimentConfig, out_dir: &Path, name: &str) -> Result<()> {
    cfg.validate()?;
    let series = run_experiment(cfg)?;
    let files = emit_results(&series, cfg, out_dir, name)?;
    for p in &series.policies {
        println!(
            "{p}: final mean regret {:.3}",
            series.final_regret(*p).unwrap_or(0.0)
        );
    }
    println!("wrote {}", files.csv.display());
    println!("wrote {}", files.manifest.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, common } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            common.apply(&mut cfg)?;
            let dir = resolve_output_dir(common.out_dir.as_deref());
            execute(&cfg, &dir, &stem(Some(&config), common.name.as_deref()))
        }
        Command::Sweep {
            param,
            values,
            config,
            common,
        } => {
            let mut base = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            common.apply(&mut base)?;
            let dir = resolve_output_dir(common.out_dir.as_deref());
            let prefix = stem(config.as_deref(), common.name.as_deref());
            for v in &values {
                let mut cfg = base.clone();
                cfg.set(param.field(), v.trim())?;
                let name = format!("{prefix}_{}{}", param.label(), v.trim());
                execute(&cfg, &dir, &name)?;
            }
            Ok(())
        }
        Command::Validate { config, set } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            apply_overrides(&mut cfg, &set)?;
            cfg.validate()?;
            cfg.statistics()?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Theorem1 { n, k, mu, delta } => {
            let th = exploration_threshold(n, k, mu, delta)?;
            println!("Q={}", th.per_band);
            println!("W={}", th.slots);
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
