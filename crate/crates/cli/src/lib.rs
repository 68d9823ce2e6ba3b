//! Library side of the `backaction-sim` command: configuration, runs,
//! sweeps, reproduction reports and circuit compilation.

pub mod compile;
pub mod config;
pub mod dataset;
pub mod output;
pub mod reproduce;
pub mod run;
pub mod sweep;

pub use config::RunConfig;
pub use reproduce::{cmd_reproduce, Target};
pub use run::{cmd_run, CliError, RunRecord};
pub use sweep::{cmd_sweep, SweepSpec};
