//! Experiment configuration, Monte-Carlo runner, output and CLI.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;

pub use cli::cli_main;
pub use config::{CaseName, ExperimentConfig, RsMode};
pub use experiment::{
    compute_regret, run_experiment, run_replication, MetricSeries, ReplicationSummary,
};
pub use output::{emit_results, render_csv, resolve_output_dir, EmittedFiles, OUTPUT_DIR_ENV};
