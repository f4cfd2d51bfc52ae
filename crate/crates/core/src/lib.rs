//! Deterministic round-based simulator of clustered wireless sensor networks.
//!
//! Sensors with disk sensing and radio models are dropped on a rectangular
//! field around a base station. Each round the network elects cluster heads,
//! members report to their head, and heads send the aggregated reading to the
//! base station. Two protocols are provided: a coverage-aware scheme with
//! competitive-learning head election and probabilistic multipath routing,
//! and the LEACH baseline.

pub mod cli;
pub mod clustering;
pub mod config;
pub mod energy;
pub mod field;
pub mod format;
pub mod geom;
pub mod metric;
pub mod metrics;
pub mod routing;
pub mod sim;

pub use config::{Protocol, ScenarioConfig};
pub use geom::{NodeId, Point};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}
