#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsnsim::field::{FieldConfig, SensorPlacement};
use wsnsim::geom::{NodeId, Point};
use wsnsim::metric::LinkCost;
use wsnsim::routing::TopologyGraph;

/// Random graph of `n` vertices (the last one the destination) on a
/// 100 m square with each ordered pair linked with probability `density`.
pub fn random_graph(seed: u64, n: usize, density: f64) -> (TopologyGraph, NodeId, Vec<(NodeId, NodeId, f64)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<(NodeId, Point)> = (0..n)
        .map(|i| (NodeId(i as u32), Point::new(rng.gen::<f64>() * 100.0, rng.gen::<f64>() * 100.0)))
        .collect();
    let mut graph = TopologyGraph::new(vertices);
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in 0..n as u32 {
            if a != b && rng.gen::<f64>() < density {
                let value = 0.1 + rng.gen::<f64>() * 5.0;
                // link_cost reduces to 1/area when E^D = tx + rx
                let link = LinkCost::new(NodeId(a), NodeId(b), 1.0, 0.5, 0.5, 1.0 / value).unwrap();
                edges.push((NodeId(a), NodeId(b), link.value));
                graph.add_edge(link).unwrap();
            }
        }
    }
    (graph, NodeId(n as u32 - 1), edges)
}

/// Minimum admissible path cost from every vertex by exhaustive enumeration
/// of simple paths, summed destination-side first.
pub fn brute_force_min_costs(graph: &TopologyGraph, edges: &[(NodeId, NodeId, f64)], dest: NodeId) -> BTreeMap<NodeId, f64> {
    let mut out_edges: BTreeMap<NodeId, Vec<(NodeId, f64)>> = BTreeMap::new();
    for &(a, b, v) in edges {
        if graph.admissible(a, b, dest) {
            out_edges.entry(a).or_default().push((b, v));
        }
    }
    fn walk(
        at: NodeId,
        dest: NodeId,
        out: &BTreeMap<NodeId, Vec<(NodeId, f64)>>,
        visited: &mut Vec<NodeId>,
        path_values: &mut Vec<f64>,
        best: &mut Option<f64>,
    ) {
        if at == dest {
            let total = path_values.iter().rev().fold(0.0, |suffix, v| v + suffix);
            if best.is_none_or(|b| total < b) {
                *best = Some(total);
            }
            return;
        }
        for &(next, v) in out.get(&at).map(Vec::as_slice).unwrap_or(&[]) {
            if visited.contains(&next) {
                continue;
            }
            visited.push(next);
            path_values.push(v);
            walk(next, dest, out, visited, path_values, best);
            path_values.pop();
            visited.pop();
        }
    }
    let mut result = BTreeMap::new();
    for v in graph.vertices() {
        let mut best = None;
        walk(v, dest, &out_edges, &mut vec![v], &mut Vec::new(), &mut best);
        if let Some(b) = best {
            result.insert(v, b);
        }
    }
    result
}

/// `n` sensors placed uniformly over `field` from `seed`.
pub fn random_placements(seed: u64, n: usize, field: &FieldConfig, sensing: f64, radio: f64) -> Vec<SensorPlacement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let p = Point::new(rng.gen::<f64>() * field.width, rng.gen::<f64>() * field.height);
            SensorPlacement::new(NodeId(i as u32), p, sensing, radio, field).unwrap()
        })
        .collect()
}
