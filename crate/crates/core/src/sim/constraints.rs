use std::collections::BTreeMap;

use serde::Serialize;

use crate::geom::NodeId;

use super::engine::Simulation;
use super::RoundRecord;

/// Relative slack on the cumulative energy check, covering floating-point
/// summation of many small charges.
pub const FLOW_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// Total charged energy exceeds the initial battery.
    Energy { node: NodeId, spent: f64, initial: f64 },
    /// Energy charged in one round exceeds the per-round cap.
    Power { round: u64, node: NodeId, spent: f64, cap: f64 },
    NegativeFlow { round: u64, from: NodeId, to: NodeId, readings: i64 },
    /// `out - in + dropped != generated` at one node in one round.
    FlowImbalance { round: u64, node: NodeId, outflow: i64, inflow: i64, dropped: i64, generated: i64 },
}

/// Checks the energy budget, per-round power cap, flow sign and per-node
/// per-round flow conservation over everything the simulation has recorded.
pub fn check_constraints(sim: &Simulation) -> Vec<Violation> {
    let mut out = Vec::new();
    for (ledger, &spent) in sim.ledgers().iter().zip(sim.cumulative_spent()) {
        if spent > ledger.initial * (1.0 + FLOW_SLACK) {
            out.push(Violation::Energy { node: ledger.node_id, spent, initial: ledger.initial });
        }
    }
    for record in sim.records() {
        check_round(record, sim.p_maximum(), sim.base_station(), &mut out);
    }
    out
}

fn check_round(record: &RoundRecord, cap: f64, bs: NodeId, out: &mut Vec<Violation>) {
    for (i, &spent) in record.spent.iter().enumerate() {
        if spent > cap {
            out.push(Violation::Power { round: record.round, node: NodeId(i as u32), spent, cap });
        }
    }
    let mut outflow: BTreeMap<NodeId, i64> = BTreeMap::new();
    let mut inflow: BTreeMap<NodeId, i64> = BTreeMap::new();
    for (&(from, to), &readings) in &record.flows {
        if readings < 0 {
            out.push(Violation::NegativeFlow { round: record.round, from, to, readings });
        }
        *outflow.entry(from).or_insert(0) += readings;
        *inflow.entry(to).or_insert(0) += readings;
    }
    let nodes = outflow
        .keys()
        .chain(inflow.keys())
        .chain(record.generated.keys())
        .chain(record.dropped.keys())
        .copied()
        .filter(|&n| n != bs)
        .collect::<std::collections::BTreeSet<_>>();
    for node in nodes {
        let o = outflow.get(&node).copied().unwrap_or(0);
        let i = inflow.get(&node).copied().unwrap_or(0);
        let d = record.dropped.get(&node).copied().unwrap_or(0);
        let g = record.generated.get(&node).copied().unwrap_or(0);
        if o - i + d != g {
            out.push(Violation::FlowImbalance {
                round: record.round,
                node,
                outflow: o,
                inflow: i,
                dropped: d,
                generated: g,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> RoundRecord {
        let mut r = RoundRecord { round: 3, spent: vec![0.1, 0.2], ..Default::default() };
        r.generated.insert(NodeId(0), 1);
        r.generated.insert(NodeId(1), 1);
        r.flows.insert((NodeId(0), NodeId(1)), 1);
        r.flows.insert((NodeId(1), NodeId(2)), 2);
        r
    }

    #[test]
    fn balanced_round_passes() {
        let mut v = Vec::new();
        check_round(&record(), 0.5, NodeId(2), &mut v);
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn drops_balance_the_books() {
        let mut r = record();
        r.flows.insert((NodeId(1), NodeId(2)), 1);
        r.dropped.insert(NodeId(1), 1);
        let mut v = Vec::new();
        check_round(&r, 0.5, NodeId(2), &mut v);
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn each_violation_kind_is_reported() {
        let mut r = record();
        r.flows.insert((NodeId(1), NodeId(2)), 3);
        r.spent[1] = 0.6;
        let mut v = Vec::new();
        check_round(&r, 0.5, NodeId(2), &mut v);
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(matches!(v[0], Violation::Power { node: NodeId(1), .. }));
        assert!(matches!(v[1], Violation::FlowImbalance { node: NodeId(1), outflow: 3, inflow: 1, .. }));

        let mut r = record();
        r.flows.insert((NodeId(0), NodeId(1)), -1);
        let mut v = Vec::new();
        check_round(&r, 0.5, NodeId(2), &mut v);
        assert!(v.iter().any(|x| matches!(x, Violation::NegativeFlow { .. })));
    }
}
