//! Config-driven front end for the `syk-sre` solvers.

pub mod config;
pub mod output;
pub mod run;

pub use config::{check_doubling, parse_config, ConfigError, InitChoice, Mode, RunConfig};
pub use output::{emit_csv, render_csv, Row, RunManifest, CSV_HEADER};
pub use run::{run, RunOutcome};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "SYK_SRE_THREADS";
