//! LEACH randomized rotating cluster-head election.

use rand::Rng;

use crate::geom::NodeId;

/// Rounds per rotation epoch, `ceil(1/p)`.
pub fn epoch_length(p: f64) -> u64 {
    (1.0 / p).ceil() as u64
}

/// Election threshold `T(n) = p / (1 - p (r mod ceil(1/p)))` for a node that
/// has not yet served in the current epoch, capped at 1.
pub fn leach_threshold(round: u64, p: f64) -> f64 {
    let r = (round % epoch_length(p)) as f64;
    (p / (1.0 - p * r)).min(1.0)
}

/// One election draw per eligible node, in node-id order.
///
/// `eligibility` is indexed by node id and should be true only for alive
/// nodes that have not served in the current epoch.
pub fn leach_elect<R: Rng + ?Sized>(round: u64, p: f64, eligibility: &[bool], rng: &mut R) -> Vec<NodeId> {
    let threshold = leach_threshold(round, p);
    eligibility
        .iter()
        .enumerate()
        .filter(|(_, &ok)| ok)
        .filter_map(|(i, _)| (rng.gen::<f64>() < threshold).then_some(NodeId(i as u32)))
        .collect()
}

/// LEACH elector that remembers who served in the current epoch.
#[derive(Debug, Clone)]
pub struct LeachElector {
    pub p: f64,
    served: Vec<bool>,
}

impl LeachElector {
    pub fn new(p: f64, node_count: usize) -> Self {
        assert!(p > 0.0 && p < 1.0, "LEACH p must be in (0, 1), got {p}");
        Self { p, served: vec![false; node_count] }
    }

    pub fn has_served(&self, id: NodeId) -> bool {
        self.served[id.index()]
    }

    pub fn elect<R: Rng + ?Sized>(&mut self, round: u64, alive: &[bool], rng: &mut R) -> Vec<NodeId> {
        if round % epoch_length(self.p) == 0 {
            self.served.iter_mut().for_each(|s| *s = false);
        }
        let eligibility: Vec<bool> = alive.iter().zip(&self.served).map(|(&a, &s)| a && !s).collect();
        let heads = leach_elect(round, self.p, &eligibility, rng);
        for h in &heads {
            self.served[h.index()] = true;
        }
        heads
    }
}
