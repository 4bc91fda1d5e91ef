//! Scenario files, the end-to-end runner and its artifacts for the `sfp` binary.

pub mod config;
pub mod render;
pub mod report;
pub mod runner;

pub use config::{load_config, parse_config, ConfigError, Issue, ScenarioConfig};
pub use report::Summary;
pub use runner::{run_scenario, solve_scenario, RunError};

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVALID_CONFIG: i32 = 1;
    pub const ENGINE: i32 = 2;
    pub const THRESHOLD: i32 = 3;
}
