//! First-order radio energy model and per-node energy ledgers.
//!
//! Transmitting `k` bytes over `d` meters costs `(e_elect + e_amp * d^rho) * 8k`
//! and receiving them costs `e_elect * 8k`. Neighbors that only decode the
//! header of an overheard packet pay `e_elect * header_bits`.

use thiserror::Error;

use crate::geom::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("receiver count {intended} exceeds neighborhood {neighbors}")]
    ReceiverCountExceedsNeighborhood { intended: usize, neighbors: usize },
    #[error("charge on dead node {0}")]
    ChargeOnDeadNode(NodeId),
    #[error("invalid radio parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Electronics energy, J/bit.
    pub e_elect: f64,
    /// Amplifier coefficient, J/bit/m^rho.
    pub e_amp: f64,
    /// Path-loss exponent, 2 or 4.
    pub rho: u32,
    pub header_bits: u32,
    pub data_packet_bits: u32,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self { e_elect: 70e-9, e_amp: 120e-12, rho: 2, header_bits: 20, data_packet_bits: 4096 }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        if !(self.e_elect > 0.0) {
            return Err(EnergyError::InvalidParam { name: "e_elect", reason: "must be > 0" });
        }
        if !(self.e_amp >= 0.0) {
            return Err(EnergyError::InvalidParam { name: "e_amp", reason: "must be >= 0" });
        }
        if self.rho != 2 && self.rho != 4 {
            return Err(EnergyError::InvalidParam { name: "rho", reason: "must be 2 or 4" });
        }
        if self.header_bits == 0 {
            return Err(EnergyError::InvalidParam { name: "header_bits", reason: "must be > 0" });
        }
        if self.data_packet_bits == 0 {
            return Err(EnergyError::InvalidParam { name: "data_packet_bits", reason: "must be > 0" });
        }
        Ok(())
    }

    /// Data packet size in bytes, the `k` of the transmit/receive formulas.
    pub fn data_packet_bytes(&self) -> f64 {
        f64::from(self.data_packet_bits) / 8.0
    }
}

/// Energy to transmit `payload_bytes` over `distance` meters.
pub fn tx_energy(params: &RadioParams, distance: f64, payload_bytes: f64) -> f64 {
    (params.e_elect + params.e_amp * distance.powi(params.rho as i32)) * 8.0 * payload_bytes
}

/// Energy to receive `payload_bytes`.
pub fn rx_energy(params: &RadioParams, payload_bytes: f64) -> f64 {
    params.e_elect * 8.0 * payload_bytes
}

/// Energy a non-addressed neighbor spends decoding only the header.
pub fn header_rx_energy(params: &RadioParams) -> f64 {
    params.e_elect * f64::from(params.header_bits)
}

/// Total energy of one broadcast: sender, `intended` full receivers and the
/// remaining `neighbors - intended` header-only decoders.
pub fn broadcast_energy(
    params: &RadioParams,
    distance: f64,
    payload_bytes: f64,
    intended: usize,
    neighbors: usize,
) -> Result<f64, EnergyError> {
    if intended > neighbors {
        return Err(EnergyError::ReceiverCountExceedsNeighborhood { intended, neighbors });
    }
    Ok(tx_energy(params, distance, payload_bytes)
        + intended as f64 * rx_energy(params, payload_bytes)
        + (neighbors - intended) as f64 * header_rx_energy(params))
}

/// Outcome of a ledger charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charged {
    /// Energy actually removed (the request, clamped to the residual).
    pub spent: f64,
    /// The residual could pay the full request.
    pub affordable: bool,
    /// The node is dead after the charge.
    pub depleted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub node_id: NodeId,
    pub initial: f64,
    pub residual: f64,
    pub alive: bool,
}

impl EnergyLedger {
    pub fn new(node_id: NodeId, initial: f64) -> Self {
        Self { node_id, initial, residual: initial, alive: initial > 0.0 }
    }

    /// Removes `amount` from the residual, clamping at zero. A node whose
    /// residual reaches zero is dead; charging it again is an error.
    pub fn charge(&mut self, amount: f64) -> Result<Charged, EnergyError> {
        debug_assert!(amount >= 0.0, "negative charge {amount}");
        if !self.alive {
            return Err(EnergyError::ChargeOnDeadNode(self.node_id));
        }
        let affordable = amount <= self.residual;
        let spent = amount.min(self.residual);
        self.residual = if affordable { self.residual - amount } else { 0.0 };
        self.alive = self.residual > 0.0;
        Ok(Charged { spent, affordable, depleted: !self.alive })
    }

    pub fn spent(&self) -> f64 {
        self.initial - self.residual
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn tx_energy_examples() {
        let p = RadioParams::default();
        assert!(rel_eq(tx_energy(&p, 0.0, 512.0), 2.8672e-4, 1e-12));
        assert!(rel_eq(tx_energy(&p, 60.0, 512.0), 2.056192e-3, 1e-12));
        assert_eq!(tx_energy(&p, 60.0, 0.0), 0.0);
    }

    #[test]
    fn rx_energy_examples() {
        let p = RadioParams::default();
        assert!(rel_eq(rx_energy(&p, 512.0), 2.8672e-4, 1e-12));
        assert_eq!(rx_energy(&p, 0.0), 0.0);
        assert!(rel_eq(rx_energy(&p, 1.0), 5.6e-7, 1e-12));
    }

    #[test]
    fn header_rx_energy_examples() {
        let p = RadioParams::default();
        assert!(rel_eq(header_rx_energy(&p), 1.4e-6, 1e-12));
        let q = RadioParams { header_bits: 8 * 512, ..p };
        assert_eq!(header_rx_energy(&q), rx_energy(&q, 512.0));
        let z = RadioParams { e_elect: 0.0, ..p };
        assert_eq!(header_rx_energy(&z), 0.0);
    }

    #[test]
    fn broadcast_energy_examples() {
        let p = RadioParams::default();
        let et = tx_energy(&p, 0.0, 512.0);
        let er = rx_energy(&p, 512.0);
        let eh = header_rx_energy(&p);
        assert_eq!(broadcast_energy(&p, 0.0, 512.0, 4, 4).unwrap(), et + 4.0 * er);
        assert_eq!(broadcast_energy(&p, 0.0, 512.0, 0, 3).unwrap(), et + 3.0 * eh);
        assert!(rel_eq(broadcast_energy(&p, 0.0, 512.0, 2, 5).unwrap(), 8.6436e-4, 1e-12));
        assert_eq!(
            broadcast_energy(&p, 0.0, 512.0, 6, 5),
            Err(EnergyError::ReceiverCountExceedsNeighborhood { intended: 6, neighbors: 5 })
        );
    }

    #[test]
    fn radio_validation() {
        assert!(RadioParams::default().validate().is_ok());
        assert!(RadioParams { rho: 3, ..Default::default() }.validate().is_err());
        assert!(RadioParams { e_elect: 0.0, ..Default::default() }.validate().is_err());
        assert!(RadioParams { header_bits: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn charge_examples() {
        let mut l = EnergyLedger::new(NodeId(0), 5.0);
        let c = l.charge(0.0).unwrap();
        assert!(c.affordable && !c.depleted);
        assert_eq!(l.residual, 5.0);

        let mut l = EnergyLedger { node_id: NodeId(1), initial: 5.0, residual: 1e-6, alive: true };
        let c = l.charge(2e-6).unwrap();
        assert_eq!(l.residual, 0.0);
        assert!(!l.alive && c.depleted && !c.affordable);
        assert_eq!(c.spent, 1e-6);
        assert_eq!(l.charge(1.0), Err(EnergyError::ChargeOnDeadNode(NodeId(1))));

        let mut l = EnergyLedger { node_id: NodeId(2), initial: 5.0, residual: 0.5, alive: true };
        l.charge(2.8672e-4).unwrap();
        assert!(rel_eq(l.residual, 0.49971328, 1e-12));
    }

    #[test]
    fn exact_payment_leaves_node_dead_but_affordable() {
        let mut l = EnergyLedger::new(NodeId(0), 1.0);
        let c = l.charge(1.0).unwrap();
        assert!(c.affordable && c.depleted);
        assert_eq!(l.residual, 0.0);
    }
}
