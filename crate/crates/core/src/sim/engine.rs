use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::{
    assign_members, elect_cluster_heads, form_fixed_clusters, CandidateState, ClusterAssignment, ElectionContext,
    LeachElector, LearningRate, NeuronWeights,
};
use crate::config::{Protocol, ScenarioConfig};
use crate::energy::{header_rx_energy, rx_energy, tx_energy, EnergyLedger, RadioParams};
use crate::field::{CoverageIndex, FieldConfig, SensorPlacement};
use crate::geom::{NodeId, Point};
use crate::metric::{delivery_energy, LinkCost};
use crate::routing::{discover_routes, next_hop, RoutingTables, TopologyGraph};

use super::{
    check_constraints, Packet, PacketStatus, Role, RoundRecord, RoundReport, RunOutput, SimError,
};

const PLACEMENT_STREAM: u64 = 0;
const ROUND_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Charge {
    Paid,
    /// Over the per-round cap; nothing was charged.
    Refused,
    /// The residual could not cover the request; the node died.
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Hop {
    Received,
    Lost,
}

/// A deployed network and its evolving state.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: ScenarioConfig,
    field: FieldConfig,
    radio: RadioParams,
    placements: Vec<SensorPlacement>,
    ledgers: Vec<EnergyLedger>,
    roles: Vec<Option<Role>>,
    bs: NodeId,
    coverage: CoverageIndex,
    cover_counts: Vec<u32>,
    uncovered: usize,
    /// Sensors within radio range of each sensor.
    neighbors: Vec<Vec<NodeId>>,
    clusters: Vec<Vec<NodeId>>,
    neurons: Vec<NeuronWeights>,
    rate: LearningRate,
    leach: LeachElector,
    routes: Option<RoutingTables>,
    rng: ChaCha8Rng,
    p_maximum: f64,
    round: u64,
    next_packet_id: u64,
    finished: bool,
    /// Per-round bookkeeping of the round in progress.
    current: RoundRecord,
    records: Vec<RoundRecord>,
    cumulative: Vec<f64>,
}

/// Places `node_count` sensors uniformly at random and builds the initial
/// coverage, clusters and routes.
pub fn deploy(config: &ScenarioConfig) -> Result<Simulation, SimError> {
    config
        .validate()
        .map_err(|(key, reason)| SimError::Config { key, reason })?;
    let field = config.field_config();
    field.validate()?;
    let n = config.field.node_count;

    let mut placement_rng = ChaCha8Rng::seed_from_u64(config.seeds.placement);
    placement_rng.set_stream(PLACEMENT_STREAM);
    let placements = (0..n)
        .map(|i| {
            let p = Point::new(
                placement_rng.gen::<f64>() * field.width,
                placement_rng.gen::<f64>() * field.height,
            );
            SensorPlacement::new(NodeId(i as u32), p, config.field.sensing_range, config.radio_range(), &field)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Simulation::from_placements(config, placements)
}

impl Simulation {
    /// Builds a simulation over explicit sensor positions. Ids must be
    /// `0..placements.len()` in order.
    pub fn from_placements(config: &ScenarioConfig, placements: Vec<SensorPlacement>) -> Result<Self, SimError> {
        let field = config.field_config();
        let radio = config.radio_params();
        let n = placements.len();
        if placements.iter().enumerate().any(|(i, p)| p.node_id.index() != i) {
            return Err(SimError::Config { key: "placements".into(), reason: "ids must be 0..n in order".into() });
        }
        let coverage = CoverageIndex::build(&placements, &field)?;
        let cover_counts = coverage.cover_counts(0..n);
        let uncovered = cover_counts.iter().filter(|&&c| c == 0).count();
        let neighbors = placements
            .iter()
            .map(|a| {
                placements
                    .iter()
                    .filter(|b| b.node_id != a.node_id && a.position.distance(b.position) <= a.radio_range)
                    .map(|b| b.node_id)
                    .collect()
            })
            .collect();
        let positions: Vec<(NodeId, Point)> = placements.iter().map(|p| (p.node_id, p.position)).collect();
        let clusters = match config.protocol.name {
            Protocol::Proposed => form_fixed_clusters(&positions, config.cluster_count()),
            Protocol::Leach => Vec::new(),
        };
        let neurons = (0..clusters.len()).map(NeuronWeights::zeros).collect();
        let rate = LearningRate::new(config.protocol.mu, config.protocol.mu_decay)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seeds.rng);
        rng.set_stream(ROUND_STREAM);
        let mut sim = Self {
            config: config.clone(),
            field,
            radio,
            ledgers: placements.iter().map(|p| EnergyLedger::new(p.node_id, config.radio.initial_energy)).collect(),
            roles: vec![None; n],
            bs: NodeId(n as u32),
            coverage,
            cover_counts,
            uncovered,
            neighbors,
            clusters,
            neurons,
            rate,
            leach: LeachElector::new(config.protocol.leach_p, n),
            routes: None,
            rng,
            p_maximum: config.p_maximum(),
            round: 0,
            next_packet_id: 0,
            finished: false,
            current: RoundRecord::default(),
            records: Vec::new(),
            cumulative: vec![0.0; n],
            placements,
        };
        if sim.config.protocol.name == Protocol::Proposed {
            sim.rebuild_routes()?;
        }
        Ok(sim)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn placements(&self) -> &[SensorPlacement] {
        &self.placements
    }

    pub fn ledgers(&self) -> &[EnergyLedger] {
        &self.ledgers
    }

    pub fn base_station(&self) -> NodeId {
        self.bs
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn is_finished(&self) -> bool {
        self.finished || self.round >= self.config.protocol.rounds_max
    }

    /// Current forwarding tables (proposed protocol only).
    pub fn routes(&self) -> Option<&RoutingTables> {
        self.routes.as_ref()
    }

    pub fn clusters(&self) -> &[Vec<NodeId>] {
        &self.clusters
    }

    pub fn role(&self, id: NodeId) -> Option<Role> {
        self.roles.get(id.index()).copied().flatten()
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn cumulative_spent(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn p_maximum(&self) -> f64 {
        self.p_maximum
    }

    pub fn alive_ids(&self) -> Vec<NodeId> {
        self.ledgers.iter().filter(|l| l.alive).map(|l| l.node_id).collect()
    }

    /// The alive sensors jointly cover every field sample point.
    pub fn alive_set_is_cover(&self) -> bool {
        self.uncovered == 0
    }

    pub fn coverage_ratio(&self) -> f64 {
        let total = self.cover_counts.len();
        (total - self.uncovered) as f64 / total as f64
    }

    fn alive(&self, id: NodeId) -> bool {
        self.ledgers.get(id.index()).is_some_and(|l| l.alive)
    }

    fn position(&self, id: NodeId) -> Point {
        if id == self.bs {
            self.field.bs_position
        } else {
            self.placements[id.index()].position
        }
    }

    fn data_bytes(&self) -> f64 {
        self.radio.data_packet_bytes()
    }

    fn rebuild_routes(&mut self) -> Result<(), SimError> {
        let bytes = self.data_bytes();
        let rx = rx_energy(&self.radio, bytes);
        let alive = self.alive_ids();
        let mut graph = TopologyGraph::new(
            alive
                .iter()
                .map(|&id| (id, self.position(id)))
                .chain(std::iter::once((self.bs, self.field.bs_position))),
        );
        for &from in &alive {
            let p = &self.placements[from.index()];
            let area = self.coverage.covered_area(from.index());
            let targets = self.neighbors[from.index()].iter().copied().filter(|&to| self.alive(to));
            let bs_in_range = p.position.distance(self.field.bs_position) <= p.radio_range;
            for to in targets.chain(bs_in_range.then_some(self.bs)) {
                let tx = tx_energy(&self.radio, p.position.distance(self.position(to)), bytes);
                let ed = delivery_energy(tx, rx, self.config.radio.delivery_ratio);
                let link = LinkCost::new(from, to, ed, tx, rx, area).map_err(|_| SimError::Config {
                    key: "field.sensing_range".into(),
                    reason: format!("sensor {from} covers no sample point"),
                })?;
                graph.add_edge(link)?;
            }
        }
        self.routes = Some(discover_routes(&graph, self.bs, self.config.protocol.alpha)?);
        Ok(())
    }

    /// Charges `amount` to `id` under the per-round cap.
    fn charge(&mut self, id: NodeId, amount: f64) -> Charge {
        let i = id.index();
        if self.current.spent[i] + amount > self.p_maximum {
            return Charge::Refused;
        }
        let charged = self.ledgers[i].charge(amount).expect("only alive nodes are charged");
        self.current.spent[i] += charged.spent;
        self.cumulative[i] += charged.spent;
        if charged.affordable {
            Charge::Paid
        } else {
            Charge::Exhausted
        }
    }

    /// One data transmission `from -> to` carrying `readings` readings.
    fn transmit(&mut self, packet: &mut Packet, from: NodeId, to: NodeId) -> Hop {
        let bytes = packet.size_bits as f64 / 8.0;
        let d = self.position(from).distance(self.position(to));
        let tx = tx_energy(&self.radio, d, bytes);
        if self.charge(from, tx) != Charge::Paid {
            return Hop::Lost;
        }
        packet.hop_trace.push(to);
        let header = header_rx_energy(&self.radio);
        for k in 0..self.neighbors[from.index()].len() {
            let n = self.neighbors[from.index()][k];
            if n != to && self.alive(n) {
                // an overhearer over its cap simply does not decode the header
                let _ = self.charge(n, header);
            }
        }
        if to == self.bs {
            return Hop::Received;
        }
        if !self.alive(to) {
            return Hop::Lost;
        }
        match self.charge(to, rx_energy(&self.radio, bytes)) {
            Charge::Paid => {
                *self.current.flows.entry((from, to)).or_insert(0) += packet.readings as i64;
                Hop::Received
            }
            _ => Hop::Lost,
        }
    }

    fn new_packet(&mut self, origin: NodeId, readings: u32) -> Packet {
        let packet_id = self.next_packet_id;
        self.next_packet_id += 1;
        Packet {
            packet_id,
            origin,
            size_bits: self.radio.data_packet_bits,
            readings,
            hop_trace: vec![origin],
            status: PacketStatus::InFlight,
        }
    }

    fn drop_at(&mut self, holder: NodeId, readings: u32) {
        *self.current.dropped.entry(holder).or_insert(0) += readings as i64;
    }

    /// Sends a packet from `holder` straight to `to`; returns delivered readings
    /// when `to` is the base station.
    fn send_direct(&mut self, holder: NodeId, to: NodeId, readings: u32) -> (Hop, u64) {
        let mut packet = self.new_packet(holder, readings);
        let hop = self.transmit(&mut packet, holder, to);
        match hop {
            Hop::Lost => {
                packet.status = PacketStatus::Lost;
                self.drop_at(holder, readings);
                (hop, 0)
            }
            Hop::Received if to == self.bs => {
                packet.status = PacketStatus::Delivered;
                *self.current.flows.entry((holder, to)).or_insert(0) += readings as i64;
                (hop, readings as u64)
            }
            Hop::Received => (hop, 0),
        }
    }

    /// Forwards a head's packet hop by hop along sampled table entries. A head
    /// without a route sends straight to the base station, as headless
    /// clusters do.
    fn forward(&mut self, head: NodeId, readings: u32) -> u64 {
        if !self.routes.as_ref().is_some_and(|r| r.has_route(head)) {
            return self.send_direct(head, self.bs, readings).1;
        }
        let mut packet = self.new_packet(head, readings);
        let ttl = self.placements.len() + 1;
        let mut holder = head;
        for _ in 0..ttl {
            let Some(table) = self.routes.as_ref().and_then(|r| r.table(holder)).filter(|t| !t.is_empty()) else {
                break;
            };
            let next = next_hop(table, &mut self.rng).expect("non-empty table");
            match self.transmit(&mut packet, holder, next) {
                Hop::Lost => break,
                Hop::Received if next == self.bs => {
                    packet.status = PacketStatus::Delivered;
                    *self.current.flows.entry((holder, next)).or_insert(0) += readings as i64;
                    return readings as u64;
                }
                Hop::Received => holder = next,
            }
        }
        packet.status = PacketStatus::Lost;
        self.drop_at(holder, readings);
        0
    }

    fn elect(&mut self, alive: &[NodeId]) -> Result<Vec<ClusterAssignment>, SimError> {
        match self.config.protocol.name {
            Protocol::Leach => {
                let alive_mask: Vec<bool> = self.ledgers.iter().map(|l| l.alive).collect();
                let heads = self.leach.elect(self.round, &alive_mask, &mut self.rng);
                let positions: Vec<(NodeId, Point)> = alive.iter().map(|&id| (id, self.position(id))).collect();
                Ok(assign_members(&positions, &heads))
            }
            Protocol::Proposed => {
                let states: Vec<Vec<CandidateState>> = self
                    .clusters
                    .iter()
                    .map(|c| {
                        let members: Vec<NodeId> = c.iter().copied().filter(|&id| self.alive(id)).collect();
                        members.iter().map(|&id| self.candidate(id, &members)).collect()
                    })
                    .collect();
                let ctx = ElectionContext {
                    initial_energy: self.config.radio.initial_energy,
                    field_diagonal: self.field.diagonal(),
                };
                let out = elect_cluster_heads(&states, &mut self.neurons, self.rate, &ctx)?;
                self.rate = self.rate.decayed();
                Ok(out)
            }
        }
    }

    /// Election inputs of `id` as head of the alive cluster `members`.
    fn candidate(&self, id: NodeId, members: &[NodeId]) -> CandidateState {
        let bytes = self.data_bytes();
        let rx = rx_energy(&self.radio, bytes);
        let here = self.position(id);
        let others = members.len().saturating_sub(1) as f64;
        let collection: f64 = members
            .iter()
            .filter(|&&m| m != id)
            .map(|&m| tx_energy(&self.radio, self.position(m).distance(here), bytes))
            .sum::<f64>()
            + others * rx;
        let table = self.routes.as_ref().and_then(|r| r.table(id)).filter(|t| !t.is_empty());
        let upstream: f64 = table
            .map(|t| {
                t.entries
                    .iter()
                    .map(|e| {
                        let hop_rx = if e.neighbor == self.bs { 0.0 } else { rx };
                        e.probability * (tx_energy(&self.radio, here.distance(self.position(e.neighbor)), bytes) + hop_rx)
                    })
                    .sum()
            })
            .unwrap_or(0.0);
        let placement = &self.placements[id.index()];
        CandidateState {
            node_id: id,
            residual: self.ledgers[id.index()].residual,
            delivery_energy: collection + upstream,
            distance_to_bs: here.distance(self.field.bs_position),
            duty_cost: others * rx + tx_energy(&self.radio, placement.radio_range, bytes),
        }
    }

    /// Runs one round. Returns `None` once the run is over.
    pub fn run_round(&mut self) -> Result<Option<RoundReport>, SimError> {
        if self.is_finished() {
            return Ok(None);
        }
        let n = self.placements.len();
        let alive = self.alive_ids();
        let mean_residual = self.ledgers.iter().map(|l| l.residual).sum::<f64>() / n as f64;
        let coverage_ratio = self.coverage_ratio();
        if alive.is_empty() {
            self.finished = true;
            return Ok(Some(RoundReport {
                round: self.round,
                alive: 0,
                mean_residual,
                generated: 0,
                delivered: 0,
                coverage_ratio,
                cluster_heads: Vec::new(),
                terminal: true,
            }));
        }
        self.current = RoundRecord { round: self.round, spent: vec![0.0; n], ..Default::default() };
        for &id in &alive {
            self.current.generated.insert(id, 1);
        }

        let assignments = self.elect(&alive)?;
        self.roles = vec![None; n];
        let mut heads: Vec<NodeId> = assignments.iter().filter_map(|a| a.head).collect();
        heads.sort_unstable();
        for a in &assignments {
            if let Some(h) = a.head {
                self.roles[h.index()] = Some(Role::ClusterHead);
            }
            for m in &a.members {
                self.roles[m.index()] = Some(Role::Member);
            }
        }

        let mut delivered = 0u64;
        // collection: members report to their head, or to the base station
        let mut held: BTreeMap<NodeId, u32> = BTreeMap::new();
        for a in &assignments {
            if let Some(h) = a.head {
                held.insert(h, 1);
            }
            for &m in &a.members {
                if !self.alive(m) {
                    self.drop_at(m, 1);
                    continue;
                }
                let to = a.head.unwrap_or(self.bs);
                let (hop, d) = self.send_direct(m, to, 1);
                delivered += d;
                if hop == Hop::Received && to != self.bs {
                    *held.get_mut(&to).expect("head holds readings") += 1;
                }
            }
        }
        // upstream: each head sends what it holds
        for (head, readings) in held {
            if !self.alive(head) {
                self.drop_at(head, readings);
                continue;
            }
            let packets: Vec<u32> = if self.config.protocol.aggregate { vec![readings] } else { vec![1; readings as usize] };
            for r in packets {
                if !self.alive(head) {
                    self.drop_at(head, r);
                    continue;
                }
                delivered += match self.config.protocol.name {
                    Protocol::Proposed => self.forward(head, r),
                    Protocol::Leach => self.send_direct(head, self.bs, r).1,
                };
            }
        }

        // deaths shrink coverage and the routing graph
        let died: Vec<NodeId> = alive.iter().copied().filter(|&id| !self.alive(id)).collect();
        for &id in &died {
            for &s in self.coverage.covered_by(id.index()) {
                let c = &mut self.cover_counts[s as usize];
                *c -= 1;
                if *c == 0 {
                    self.uncovered += 1;
                }
            }
        }
        if !died.is_empty() && self.config.protocol.name == Protocol::Proposed {
            self.rebuild_routes()?;
        }

        let report = RoundReport {
            round: self.round,
            alive: alive.len(),
            mean_residual,
            generated: alive.len() as u64,
            delivered,
            coverage_ratio,
            cluster_heads: heads,
            terminal: false,
        };
        self.records.push(std::mem::take(&mut self.current));
        self.round += 1;
        Ok(Some(report))
    }

    /// Runs to the round limit or until every sensor is dead.
    pub fn run(mut self) -> Result<RunOutput, SimError> {
        let mut reports = Vec::new();
        while let Some(r) = self.run_round()? {
            reports.push(r);
        }
        let violations = check_constraints(&self);
        Ok(RunOutput { config: self.config, reports, records: self.records, violations })
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput, SimError> {
    deploy(config)?.run()
}
