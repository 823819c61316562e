//! Library surface of `expctl`, the configuration-driven experiment runner.
//!
//! The binary is a thin argument-parsing shell over [`config`] and
//! [`runner`]; integration tests drive experiments through this crate
//! directly.

pub mod config;
pub mod runner;

pub use config::{
    ConfigError, DistinguisherParams, ExperimentConfig, ExperimentKind, OrganismParams,
    ReplayParams, SweepParams,
};
pub use runner::{execute, FileEntry, ReplayReport, RunError, RunManifest, SweepRow, MANIFEST_FILE};
