//! Base-station-initiated route discovery and probabilistic multipath
//! forwarding.
//!
//! Discovery settles nodes lowest-cost-first from the destination, which
//! yields the same minimum suffix costs as cost-proportional flooding delays.
//! A link `j -> i` carries data only when `i` is no farther from the
//! destination than `j`. Each node then keeps the admissible neighbors whose
//! suffix cost is within `alpha` times its best, and picks among them with
//! probability inversely proportional to cost.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::format::sig9;
use crate::geom::{NodeId, Point};
use crate::metric::LinkCost;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("unknown vertex {0}")]
    UnknownVertex(NodeId),
    #[error("self edge at {0}")]
    SelfEdge(NodeId),
    #[error("edge {from}->{to} has non-positive cost {cost}")]
    NonPositiveCost { from: NodeId, to: NodeId, cost: f64 },
    #[error("zero-cost link to {0}")]
    ZeroCostLink(NodeId),
    #[error("unreachable destination from {0}")]
    UnreachableDestination(NodeId),
    #[error("pruning factor alpha must be >= 1, got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub to: NodeId,
    pub cost: LinkCost,
}

/// Directed radio graph: alive sensors plus the base station.
#[derive(Debug, Clone, Default)]
pub struct TopologyGraph {
    vertices: Vec<(NodeId, Point)>,
    index: HashMap<NodeId, usize>,
    out: Vec<Vec<Edge>>,
}

impl TopologyGraph {
    pub fn new(vertices: impl IntoIterator<Item = (NodeId, Point)>) -> Self {
        let mut vertices: Vec<(NodeId, Point)> = vertices.into_iter().collect();
        vertices.sort_by_key(|(id, _)| *id);
        vertices.dedup_by_key(|(id, _)| *id);
        let index = vertices.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
        let out = vec![Vec::new(); vertices.len()];
        Self { vertices, index, out }
    }

    pub fn add_edge(&mut self, cost: LinkCost) -> Result<(), RoutingError> {
        if cost.from == cost.to {
            return Err(RoutingError::SelfEdge(cost.from));
        }
        if !(cost.value > 0.0) {
            return Err(RoutingError::NonPositiveCost { from: cost.from, to: cost.to, cost: cost.value });
        }
        let from = self.slot(cost.from)?;
        self.slot(cost.to)?;
        self.out[from].push(Edge { to: cost.to, cost });
        Ok(())
    }

    fn slot(&self, id: NodeId) -> Result<usize, RoutingError> {
        self.index.get(&id).copied().ok_or(RoutingError::UnknownVertex(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn position(&self, id: NodeId) -> Option<Point> {
        self.index.get(&id).map(|&i| self.vertices[i].1)
    }

    pub fn vertices(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.vertices.iter().map(|(id, _)| *id)
    }

    pub fn out_edges(&self, id: NodeId) -> &[Edge] {
        self.index.get(&id).map(|&i| self.out[i].as_slice()).unwrap_or(&[])
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// True iff data may flow `from -> to` on the way to `destination`.
    pub fn admissible(&self, from: NodeId, to: NodeId, destination: NodeId) -> bool {
        match (self.position(from), self.position(to), self.position(destination)) {
            // the sending node is the request's source for its own table
            (Some(f), Some(t), Some(d)) => geometric_forward_filter(f, t, f, d),
            _ => false,
        }
    }
}

/// Whether a holder forwards a discovery request to `candidate`: the candidate
/// is no farther from the source and no closer to the destination than the
/// holder.
pub fn geometric_forward_filter(candidate: Point, holder: Point, source: Point, destination: Point) -> bool {
    holder.distance(source) >= candidate.distance(source) && holder.distance(destination) <= candidate.distance(destination)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardingEntry {
    pub neighbor: NodeId,
    /// Suffix cost to the destination through this neighbor.
    pub cost_to_destination: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardingTable {
    pub owner: NodeId,
    pub destination: NodeId,
    /// Sorted by neighbor id.
    pub entries: Vec<ForwardingEntry>,
    /// Probability-weighted mean entry cost, the value advertised upstream.
    pub average_cost: f64,
}

impl ForwardingTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_cost(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.cost_to_destination).min_by(f64::total_cmp)
    }

    pub fn contains(&self, neighbor: NodeId) -> bool {
        self.entries.iter().any(|e| e.neighbor == neighbor)
    }
}

/// Result of one discovery round toward a single destination.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTables {
    pub destination: NodeId,
    /// One table per non-destination vertex; empty for unreachable nodes.
    pub tables: BTreeMap<NodeId, ForwardingTable>,
    /// Exact minimum admissible suffix cost of every reachable vertex.
    pub min_cost: BTreeMap<NodeId, f64>,
    pub unreachable: BTreeSet<NodeId>,
}

impl RoutingTables {
    pub fn table(&self, owner: NodeId) -> Option<&ForwardingTable> {
        self.tables.get(&owner)
    }

    pub fn has_route(&self, owner: NodeId) -> bool {
        owner == self.destination || self.tables.get(&owner).is_some_and(|t| !t.is_empty())
    }

    /// One line per entry: `owner,neighbor,cost,probability`, owners and
    /// neighbors ascending, numbers with nine significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for table in self.tables.values() {
            for e in &table.entries {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    table.owner,
                    e.neighbor,
                    sig9(e.cost_to_destination),
                    sig9(e.probability)
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Settle {
    cost: f64,
    id: NodeId,
}

impl Eq for Settle {}

impl Ord for Settle {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, id)
        other.cost.total_cmp(&self.cost).then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Settle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Builds every vertex's forwarding table toward `destination`.
pub fn discover_routes(graph: &TopologyGraph, destination: NodeId, alpha: f64) -> Result<RoutingTables, RoutingError> {
    if !(alpha >= 1.0) {
        return Err(RoutingError::InvalidAlpha(alpha));
    }
    if !graph.contains(destination) {
        return Err(RoutingError::UnknownVertex(destination));
    }
    // incoming admissible edges per vertex: (upstream sender, link value)
    let mut incoming: HashMap<NodeId, Vec<(NodeId, f64)>> = HashMap::new();
    for from in graph.vertices() {
        for e in graph.out_edges(from) {
            if graph.admissible(from, e.to, destination) {
                incoming.entry(e.to).or_default().push((from, e.cost.value));
            }
        }
    }

    let mut min_cost: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut tentative: HashMap<NodeId, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    tentative.insert(destination, 0.0);
    heap.push(Settle { cost: 0.0, id: destination });
    while let Some(Settle { cost, id }) = heap.pop() {
        if min_cost.contains_key(&id) {
            continue;
        }
        min_cost.insert(id, cost);
        for &(up, value) in incoming.get(&id).map(Vec::as_slice).unwrap_or(&[]) {
            if min_cost.contains_key(&up) {
                continue;
            }
            let candidate = value + cost;
            let better = tentative.get(&up).is_none_or(|&c| candidate < c);
            if better {
                tentative.insert(up, candidate);
                heap.push(Settle { cost: candidate, id: up });
            }
        }
    }

    let mut tables = BTreeMap::new();
    let mut unreachable = BTreeSet::new();
    for owner in graph.vertices().filter(|&v| v != destination) {
        let candidates: Vec<(NodeId, f64)> = graph
            .out_edges(owner)
            .iter()
            .filter(|e| graph.admissible(owner, e.to, destination))
            .filter_map(|e| min_cost.get(&e.to).map(|&suffix| (e.to, e.cost.value + suffix)))
            .collect();
        let table = if candidates.is_empty() {
            unreachable.insert(owner);
            ForwardingTable { owner, destination, entries: Vec::new(), average_cost: f64::INFINITY }
        } else {
            let entries = assign_probabilities(&prune_table(&candidates, alpha))?;
            ForwardingTable { owner, destination, average_cost: average_cost(&entries), entries }
        };
        tables.insert(owner, table);
    }
    Ok(RoutingTables { destination, tables, min_cost, unreachable })
}

/// Keeps the candidates whose cost is within `alpha` times the minimum,
/// sorted by neighbor id. With several links to one neighbor the cheapest
/// counts.
pub fn prune_table(candidates: &[(NodeId, f64)], alpha: f64) -> Vec<(NodeId, f64)> {
    let mut best: BTreeMap<NodeId, f64> = BTreeMap::new();
    for &(n, c) in candidates {
        best.entry(n).and_modify(|b| *b = b.min(c)).or_insert(c);
    }
    let Some(min) = best.values().copied().min_by(f64::total_cmp) else {
        return Vec::new();
    };
    let limit = alpha * min;
    best.into_iter().filter(|&(_, c)| c == min || c <= limit).collect()
}

/// Probabilities proportional to inverse cost.
pub fn assign_probabilities(retained: &[(NodeId, f64)]) -> Result<Vec<ForwardingEntry>, RoutingError> {
    if let Some(&(n, _)) = retained.iter().find(|(_, c)| !(*c > 0.0)) {
        return Err(RoutingError::ZeroCostLink(n));
    }
    let total: f64 = retained.iter().map(|(_, c)| 1.0 / c).sum();
    Ok(retained
        .iter()
        .map(|&(neighbor, cost)| ForwardingEntry {
            neighbor,
            cost_to_destination: cost,
            probability: (1.0 / cost) / total,
        })
        .collect())
}

pub fn average_cost(entries: &[ForwardingEntry]) -> f64 {
    entries.iter().map(|e| e.probability * e.cost_to_destination).sum()
}

/// Samples a next hop by inverse CDF over the entries (sorted by neighbor
/// id). Consumes exactly one uniform draw.
pub fn next_hop<R: Rng + ?Sized>(table: &ForwardingTable, rng: &mut R) -> Result<NodeId, RoutingError> {
    let last = table.entries.last().ok_or(RoutingError::UnreachableDestination(table.owner))?;
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for e in &table.entries {
        cumulative += e.probability;
        if u < cumulative {
            return Ok(e.neighbor);
        }
    }
    Ok(last.neighbor)
}
