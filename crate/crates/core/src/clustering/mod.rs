//! Cluster-head election and member assignment.
//!
//! Two electors live here: the competitive-learning elector used by the
//! proposed protocol ([`competitive`]) and the randomized LEACH rotation
//! ([`leach`]).

pub mod competitive;
pub mod leach;

use thiserror::Error;

use crate::geom::{NodeId, Point};

pub use competitive::{
    competitive_winner, elect_cluster_heads, form_fixed_clusters, update_weights, winner_score, CandidateState,
    ElectionContext, InputPattern, LearningRate, NeuronWeights, FEATURE_DIM, FEATURE_WEIGHTS,
};
pub use leach::{leach_elect, leach_threshold, LeachElector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("no eligible candidates")]
    NoEligibleCandidates,
    #[error("dimensionality mismatch: weights {weights}, pattern {pattern}")]
    DimensionMismatch { weights: usize, pattern: usize },
    #[error("learning rate {0} outside [0, 1]")]
    InvalidLearningRate(f64),
    #[error("weights provided for {weights} clusters, {clusters} clusters given")]
    ClusterCountMismatch { weights: usize, clusters: usize },
}

/// One cluster for one round. `head == None` marks a headless cluster whose
/// members transmit straight to the base station.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub cluster_id: usize,
    pub head: Option<NodeId>,
    /// Non-head nodes of the cluster, sorted by id.
    pub members: Vec<NodeId>,
}

impl ClusterAssignment {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.head.iter().copied().chain(self.members.iter().copied())
    }
}

/// Joins every non-head node to its nearest head (ties to the lowest head id).
/// Without heads every node becomes a headless singleton.
pub fn assign_members(alive_nodes: &[(NodeId, Point)], heads: &[NodeId]) -> Vec<ClusterAssignment> {
    let mut heads: Vec<NodeId> = heads.to_vec();
    heads.sort_unstable();
    heads.dedup();
    if heads.is_empty() {
        let mut nodes: Vec<NodeId> = alive_nodes.iter().map(|(id, _)| *id).collect();
        nodes.sort_unstable();
        return nodes
            .into_iter()
            .enumerate()
            .map(|(cluster_id, id)| ClusterAssignment { cluster_id, head: None, members: vec![id] })
            .collect();
    }
    let position_of = |id: NodeId| alive_nodes.iter().find(|(n, _)| *n == id).map(|(_, p)| *p);
    let head_positions: Vec<(NodeId, Point)> = heads
        .iter()
        .map(|&h| (h, position_of(h).expect("head must be alive")))
        .collect();
    let mut clusters: Vec<ClusterAssignment> = heads
        .iter()
        .enumerate()
        .map(|(cluster_id, &h)| ClusterAssignment { cluster_id, head: Some(h), members: Vec::new() })
        .collect();
    let mut sorted: Vec<(NodeId, Point)> = alive_nodes.to_vec();
    sorted.sort_unstable_by_key(|(id, _)| *id);
    for (id, pos) in sorted {
        if heads.binary_search(&id).is_ok() {
            continue;
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, (_, hp)) in head_positions.iter().enumerate() {
            let d = pos.distance_sq(*hp);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        clusters[best].members.push(id);
    }
    clusters
}
