//! Configuration, commands and file output behind the `weingarten` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{
    resolve_output_dir, run_export, run_geometry, run_selftest, run_solve, run_validate, SolveReport, OUT_ENV,
};
pub use config::{load_config, parse_config, GridMode, OutputFormat, RunConfig};
pub use error::{exit, CliError};
pub use output::export_mesh_obj;
