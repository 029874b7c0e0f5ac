//! Scenario-driven command-line front end for elastoray: ray tracing,
//! interface operators, amplitude transport, tomography probes and symbol
//! probes, each writing plain tables plus a run manifest.

pub mod acceptance;
pub mod commands;
pub mod manifest;
pub mod scenario;
pub mod verify;

pub use commands::{Context, RunError};
pub use manifest::{RunManifest, Status, Verdict};
pub use scenario::{load_scenario, parse_scenario, read_scenario, Scenario, ScenarioError};
