//! Host side of the front-speed solver: JSON configs, parallel parameter
//! sweeps with checkpointing, anchor validation, named scenarios and file
//! output.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;
pub mod validate;

pub use commands::{execute, CliError, Options, Report};
pub use config::{load_config, parse_config, Command, ConfigError, RunConfig};
pub use sweep::{run_sweep, SweepPlan, SweepResult};
