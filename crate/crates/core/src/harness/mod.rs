//! Configuration, grid runs, CSV output and the verification suite behind the CLI.

pub mod config;
pub mod run;
pub mod verify;

pub use config::{ExperimentConfig, Grid, LambdaSpec, Mode};
pub use run::{run, verify_checks, write_csv, Report, Table, VERSION};
pub use verify::CheckResult;
