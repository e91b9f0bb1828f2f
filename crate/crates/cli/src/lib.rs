//! Command-line front end: scenario files, simulation runs, seed sweeps
//! and H-infinity evaluation.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;

/// Bundled scenario files, by name.
pub const BUNDLED_SCENARIOS: &[(&str, &str)] = &[
    ("example1", include_str!("../scenarios/example1.cfg")),
    ("example2", include_str!("../scenarios/example2.cfg")),
    ("example3", include_str!("../scenarios/example3.cfg")),
    ("example3_comparison", include_str!("../scenarios/example3_comparison.cfg")),
];
