//! Run configuration, presets, sweeps and file output behind the command-line tool.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::RunConfig;
pub use output::{read_csv, read_csv_file, write_csv, write_csv_file, CsvRow};
pub use presets::{preset, PRESET_NAMES};
pub use run::{check_config, run_all, run_config, run_sweep, write_run, RunOutcome, RunSummary, SweepResult};
