//! Winner-take-all cluster-head election.
//!
//! Each fixed cluster owns one neuron. Every round the alive members that can
//! afford a round of head duty present an input pattern; the pattern closest
//! to the neuron's weight vector wins, and the weights move toward the
//! winner's pattern by `w' = w + mu (x - w)`.
//!
//! Pattern components are all "lower is better": energy deficit relative to
//! the initial battery, delivery energy normalized by the cluster's largest
//! candidate value this round, and distance to the base station normalized by
//! the field diagonal. With the all-zero initial weights the first election is
//! the plain argmin of the (doubly weighted) delivery energy.

use crate::geom::{NodeId, Point};

use super::{ClusterAssignment, ClusterError};

pub const FEATURE_DIM: usize = 3;

/// Per-component scale applied inside the winner distance. The delivery
/// energy component counts double.
pub const FEATURE_WEIGHTS: [f64; FEATURE_DIM] = [1.0, 2.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct InputPattern {
    pub node_id: NodeId,
    /// `[energy_deficit, delivery_energy, distance_to_bs]`, each in `[0, 1]`.
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronWeights {
    pub cluster_id: usize,
    pub weights: Vec<f64>,
}

impl NeuronWeights {
    pub fn zeros(cluster_id: usize) -> Self {
        Self { cluster_id, weights: vec![0.0; FEATURE_DIM] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRate {
    pub mu: f64,
    /// Multiplicative factor applied to `mu` after every round.
    pub decay: f64,
}

impl LearningRate {
    pub fn new(mu: f64, decay: f64) -> Result<Self, ClusterError> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(ClusterError::InvalidLearningRate(mu));
        }
        Ok(Self { mu, decay })
    }

    pub fn constant(mu: f64) -> Result<Self, ClusterError> {
        Self::new(mu, 1.0)
    }

    pub fn decayed(self) -> Self {
        Self { mu: (self.mu * self.decay).clamp(0.0, 1.0), ..self }
    }
}

/// Weighted euclidean distance between a pattern and a neuron.
pub fn winner_score(features: &[f64], weights: &[f64]) -> f64 {
    features
        .iter()
        .zip(weights)
        .zip(FEATURE_WEIGHTS.iter().chain(std::iter::repeat(&1.0)))
        .map(|((x, w), s)| {
            let d = s * (x - w);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Candidate with the smallest winner score; ties go to the lowest node id.
pub fn competitive_winner(candidates: &[InputPattern], weights: &NeuronWeights) -> Result<NodeId, ClusterError> {
    let mut best: Option<(f64, NodeId)> = None;
    for c in candidates {
        if c.features.len() != weights.weights.len() {
            return Err(ClusterError::DimensionMismatch { weights: weights.weights.len(), pattern: c.features.len() });
        }
        let score = winner_score(&c.features, &weights.weights);
        let better = match best {
            None => true,
            Some((s, id)) => score < s || (score == s && c.node_id < id),
        };
        if better {
            best = Some((score, c.node_id));
        }
    }
    best.map(|(_, id)| id).ok_or(ClusterError::NoEligibleCandidates)
}

/// Moves `weights` toward `pattern` by the fraction `mu`.
pub fn update_weights(weights: &[f64], pattern: &[f64], mu: f64) -> Result<Vec<f64>, ClusterError> {
    if weights.len() != pattern.len() {
        return Err(ClusterError::DimensionMismatch { weights: weights.len(), pattern: pattern.len() });
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(ClusterError::InvalidLearningRate(mu));
    }
    Ok(weights
        .iter()
        .zip(pattern)
        .map(|(w, x)| if mu == 1.0 { *x } else { w + mu * (x - w) })
        .collect())
}

/// Raw per-node inputs to one election.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateState {
    pub node_id: NodeId,
    pub residual: f64,
    /// Energy the cluster would spend this round delivering its data with
    /// this node as head, J.
    pub delivery_energy: f64,
    pub distance_to_bs: f64,
    /// Energy floor for one round of head duty.
    pub duty_cost: f64,
}

impl CandidateState {
    pub fn eligible(&self) -> bool {
        self.residual > 0.0 && self.residual >= self.duty_cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectionContext {
    pub initial_energy: f64,
    pub field_diagonal: f64,
}

/// Input patterns of the eligible candidates of one cluster.
pub fn build_patterns(candidates: &[CandidateState], ctx: &ElectionContext) -> Vec<InputPattern> {
    let eligible: Vec<&CandidateState> = candidates.iter().filter(|c| c.eligible()).collect();
    let load = |c: &CandidateState| c.delivery_energy / c.residual;
    let max_load = eligible.iter().map(|c| load(c)).fold(0.0, f64::max);
    eligible
        .into_iter()
        .map(|c| {
            let deficit = (1.0 - c.residual / ctx.initial_energy).clamp(0.0, 1.0);
            let delivery = if max_load > 0.0 { load(c) / max_load } else { 0.0 };
            let distance = (c.distance_to_bs / ctx.field_diagonal).clamp(0.0, 1.0);
            InputPattern { node_id: c.node_id, features: vec![deficit, delivery, distance] }
        })
        .collect()
}

/// Elects one head per cluster and trains the winning neurons.
///
/// `clusters[i]` holds the states of every alive node of cluster `i` and is
/// served by `weights[i]`. A cluster without eligible candidates is returned
/// headless.
pub fn elect_cluster_heads(
    clusters: &[Vec<CandidateState>],
    weights: &mut [NeuronWeights],
    rate: LearningRate,
    ctx: &ElectionContext,
) -> Result<Vec<ClusterAssignment>, ClusterError> {
    if clusters.len() != weights.len() {
        return Err(ClusterError::ClusterCountMismatch { weights: weights.len(), clusters: clusters.len() });
    }
    let mut out = Vec::with_capacity(clusters.len());
    for (cluster_id, (states, neuron)) in clusters.iter().zip(weights.iter_mut()).enumerate() {
        let mut nodes: Vec<NodeId> = states.iter().map(|s| s.node_id).collect();
        nodes.sort_unstable();
        let patterns = build_patterns(states, ctx);
        let head = match competitive_winner(&patterns, neuron) {
            Ok(winner) => {
                let pattern = patterns.iter().find(|p| p.node_id == winner).expect("winner has a pattern");
                neuron.weights = update_weights(&neuron.weights, &pattern.features, rate.mu)?;
                Some(winner)
            }
            Err(ClusterError::NoEligibleCandidates) => None,
            Err(e) => return Err(e),
        };
        let members = nodes.into_iter().filter(|n| Some(*n) != head).collect();
        out.push(ClusterAssignment { cluster_id, head, members });
    }
    Ok(out)
}

/// Partitions nodes into at most `k` fixed clusters by online competitive
/// learning over their positions.
///
/// Prototypes start at the positions of evenly spaced nodes (in id order) and
/// are trained for a fixed number of passes with a geometrically decaying
/// rate; each node then joins its nearest prototype. Empty clusters are
/// dropped. Returned clusters are sorted internally and ordered by their
/// lowest member id.
pub fn form_fixed_clusters(nodes: &[(NodeId, Point)], k: usize) -> Vec<Vec<NodeId>> {
    const PASSES: usize = 40;
    const MU_START: f64 = 0.5;
    const MU_END: f64 = 0.01;

    let mut nodes: Vec<(NodeId, Point)> = nodes.to_vec();
    nodes.sort_unstable_by_key(|(id, _)| *id);
    let k = k.clamp(1, nodes.len().max(1));
    if nodes.is_empty() {
        return Vec::new();
    }
    let mut prototypes: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let p = nodes[j * nodes.len() / k].1;
            vec![p.x, p.y]
        })
        .collect();
    let nearest = |protos: &[Vec<f64>], p: Point| -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, w) in protos.iter().enumerate() {
            let d = Point::new(w[0], w[1]).distance_sq(p);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    };
    for pass in 0..PASSES {
        let t = pass as f64 / (PASSES - 1) as f64;
        let mu = MU_START * (MU_END / MU_START).powf(t);
        for &(_, p) in &nodes {
            let j = nearest(&prototypes, p);
            prototypes[j] = update_weights(&prototypes[j], &[p.x, p.y], mu).expect("2-d prototypes");
        }
    }
    let mut groups: Vec<Vec<NodeId>> = vec![Vec::new(); k];
    for &(id, p) in &nodes {
        groups[nearest(&prototypes, p)].push(id);
    }
    groups.retain(|g| !g.is_empty());
    groups.sort_by_key(|g| g[0]);
    groups
}
