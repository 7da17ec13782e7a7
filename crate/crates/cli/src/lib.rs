//! Scenario configuration, end-to-end runs and sweep reports behind the `ismd` binary.

pub mod config;
pub mod scenario;
