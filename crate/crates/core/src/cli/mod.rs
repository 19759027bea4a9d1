//! Scenario files, presets, and the `afris` command line.

pub mod args;
pub mod run;
pub mod scenario;

pub use args::{execute, Args};
pub use run::run;
pub use scenario::{parse_scenario, parse_scenario_str, Scenario, Sweep, SweepKind};
