//! Coverage-aware link cost and path cost accumulation.
//!
//! The cost of a link is the delivery energy divided by the link's transmit
//! plus receive energy and by the sender's coverage area. Lower is better.

use thiserror::Error;

use crate::geom::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("degenerate link: tx + rx = {energy}, coverage area = {area}")]
    DegenerateLink { energy: f64, area: f64 },
    #[error("path revisits node {0}")]
    Loop(NodeId),
}

/// Dimensionless link cost.
pub fn link_cost(delivery_energy: f64, tx: f64, rx: f64, coverage_area: f64) -> Result<f64, MetricError> {
    let energy = tx + rx;
    if !(energy > 0.0) || !(coverage_area > 0.0) {
        return Err(MetricError::DegenerateLink { energy, area: coverage_area });
    }
    Ok(delivery_energy / (energy * coverage_area))
}

/// Energy attributed to delivering one packet over a link whose delivery
/// ratio is `delivery_ratio` (1.0 for a lossless link).
pub fn delivery_energy(tx: f64, rx: f64, delivery_ratio: f64) -> f64 {
    (tx + rx) / delivery_ratio
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCost {
    pub from: NodeId,
    pub to: NodeId,
    pub delivery_energy: f64,
    pub tx: f64,
    pub rx: f64,
    pub coverage_area: f64,
    pub value: f64,
}

impl LinkCost {
    pub fn new(
        from: NodeId,
        to: NodeId,
        delivery_energy: f64,
        tx: f64,
        rx: f64,
        coverage_area: f64,
    ) -> Result<Self, MetricError> {
        let value = link_cost(delivery_energy, tx, rx, coverage_area)?;
        Ok(Self { from, to, delivery_energy, tx, rx, coverage_area, value })
    }
}

pub fn accumulate_path_cost(prefix_cost: f64, link: &LinkCost) -> f64 {
    prefix_cost + link.value
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathCost {
    pub hops: Vec<NodeId>,
    pub total: f64,
}

impl PathCost {
    /// Builds the path traversed by `links`, which must chain head to tail.
    pub fn from_links(links: &[LinkCost]) -> Result<Self, MetricError> {
        let mut hops = Vec::with_capacity(links.len() + 1);
        let mut total = 0.0;
        if let Some(first) = links.first() {
            hops.push(first.from);
        }
        for link in links {
            debug_assert_eq!(hops.last(), Some(&link.from), "links must chain");
            if hops.contains(&link.to) {
                return Err(MetricError::Loop(link.to));
            }
            hops.push(link.to);
            total = accumulate_path_cost(total, link);
        }
        Ok(Self { hops, total })
    }
}

/// Energy per packet over a set of paths: `(sum of per-bit path energies) * bits`.
pub fn packet_energy(per_bit_energies: &[f64], packet_bits: f64) -> f64 {
    per_bit_energies.iter().sum::<f64>() * packet_bits
}
