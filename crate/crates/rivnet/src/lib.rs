//! Scenario files, task dispatch, sweeps and CSV output for `rivnet-core`.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod sweep;
pub mod tasks;

pub use config::{load_config, load_config_file, load_config_str, ConfigError, Scenario, Task, UnitRangeWarning};
pub use output::Table;
pub use tasks::{run, RunError};
