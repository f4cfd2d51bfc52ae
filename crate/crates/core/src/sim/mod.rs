//! Round-based network simulation: deployment, the per-round election,
//! collection and forwarding loop, and the feasibility validators.

mod constraints;
mod engine;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::clustering::ClusterError;
use crate::config::ScenarioConfig;
use crate::field::FieldError;
use crate::geom::NodeId;
use crate::routing::RoutingError;

pub use constraints::{check_constraints, Violation, FLOW_SLACK};
pub use engine::{deploy, run_scenario, Simulation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("invalid configuration: key `{key}`: {reason}")]
    Config { key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Member,
    ClusterHead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PacketStatus {
    InFlight,
    Delivered,
    Lost,
}

/// A data packet carrying one or more aggregated readings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Packet {
    pub packet_id: u64,
    pub origin: NodeId,
    pub size_bits: u32,
    pub readings: u32,
    pub hop_trace: Vec<NodeId>,
    pub status: PacketStatus,
}

/// State of the network at the start of a round plus the traffic of that round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub round: u64,
    pub alive: usize,
    /// Mean residual over all sensors, dead ones counting zero, J.
    pub mean_residual: f64,
    /// Readings sensed this round (one per alive sensor).
    pub generated: u64,
    /// Readings that reached the base station this round.
    pub delivered: u64,
    /// Fraction of field sample points covered by alive sensors.
    pub coverage_ratio: f64,
    pub cluster_heads: Vec<NodeId>,
    /// Emitted once when a round starts with no alive sensor.
    pub terminal: bool,
}

/// Per-round bookkeeping consumed by the validators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundRecord {
    pub round: u64,
    /// Energy charged to each sensor this round, indexed by node id.
    pub spent: Vec<f64>,
    /// Readings carried over each successful hop `(from, to)`.
    pub flows: BTreeMap<(NodeId, NodeId), i64>,
    /// Readings sensed by each node.
    pub generated: BTreeMap<NodeId, i64>,
    /// Readings lost while held by each node.
    pub dropped: BTreeMap<NodeId, i64>,
}

/// Everything a finished (or partial) run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub reports: Vec<RoundReport>,
    pub records: Vec<RoundRecord>,
    pub violations: Vec<Violation>,
}
