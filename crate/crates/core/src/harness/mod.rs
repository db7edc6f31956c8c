//! Experiment configuration, paired runs, sweeps, result files and the CLI.

mod cli;
mod config;
mod emit;
mod run;
mod sweep;

pub use cli::{run_cli, Cli, Command, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};
pub use config::{parse_seed_range, ExperimentConfig, OutputFormat, RhoSetting};
pub use emit::{
    emit_results, read_result_csv, read_result_jsonl, result_rows, EmittedFiles, ItemRow, ResultRow, CSV_COLUMNS,
};
pub use run::{resolve_rho, run_experiment, run_seed, RunMeta, RunRecord, StepRow};
pub use sweep::{summarize, sweep, write_sweep_csv, SweepParam, SweepRow, SWEEP_WINDOW};
