//! Network instances: node roles, per-slot geometry, radio constants and QoS
//! targets.
//!
//! Units are fixed throughout: meters, seconds, Hz, watts, bits. Decibel
//! conversions happen only in [`crate::channel`].

mod document;
mod generate;

pub use document::{load_scenario, save_scenario, to_json, SCHEMA_VERSION};
pub use generate::{generate_random_topology, CoverageHole, TopologyParams};

use serde::{Deserialize, Serialize};

use crate::channel::CsiTensor;
use crate::links::{LinkGrid, NodeRole};
use crate::{Error, Result};

/// A point in the flat 2-D plane plus antenna height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 3]> for Position {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Position { x, y, z }
    }
}

impl From<Position> for [f64; 3] {
    fn from(p: Position) -> Self {
        [p.x, p.y, p.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    pub uavs: usize,
    pub vessels: usize,
    pub relay_vessels: usize,
    pub slots: usize,
    pub subcarriers: usize,
}

/// Environment constants of the air-to-ground logistic path-loss model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirParams {
    pub a: f64,
    pub b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
}

impl AirParams {
    /// Low-altitude maritime values used throughout the evaluation.
    pub const MARITIME_LOW_ALTITUDE: AirParams = AirParams {
        a: 5.0188,
        b: 0.3511,
        eta_los_db: 2.3,
        eta_nlos_db: 34.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Radio {
    pub slot_seconds: f64,
    pub subcarrier_bandwidth_hz: f64,
    pub noise_power_w: f64,
    pub carrier_mhz: f64,
    pub env_constant_db: f64,
    pub air: AirParams,
}

impl Radio {
    /// 30 s slots, 1 MHz subcarriers, -114 dBm noise, 2 GHz carrier, C = 1 dB.
    pub fn maritime_default() -> Self {
        Radio {
            slot_seconds: 30.0,
            subcarrier_bandwidth_hz: 1.0e6,
            noise_power_w: dbm_to_watts(-114.0),
            carrier_mhz: 2000.0,
            env_constant_db: 1.0,
            air: AirParams::MARITIME_LOW_ALTITUDE,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub role: NodeRole,
    /// Per-subcarrier power cap. Required for transmitters.
    pub max_power_w: Option<f64>,
    /// On-board energy budget over the horizon (UAVs only).
    pub energy_budget_j: Option<f64>,
    /// One waypoint per slot; `z` is the antenna or flight height.
    pub trajectory: Vec<Position>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosTarget {
    pub volume_bits: f64,
    /// 1-based slot by whose end the volume must have arrived.
    pub deadline_slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub counts: Counts,
    pub radio: Radio,
    pub nodes: Vec<Node>,
    /// One entry per vessel, in vessel-id order.
    pub qos: Vec<QosTarget>,
    /// Free-form provenance (generator parameters and similar).
    pub metadata: Option<serde_json::Value>,
}

impl Scenario {
    pub fn grid(&self) -> LinkGrid {
        LinkGrid::new(
            self.counts.uavs,
            self.counts.vessels,
            self.counts.relay_vessels,
            self.counts.slots,
        )
    }

    pub fn slots(&self) -> usize {
        self.counts.slots
    }

    pub fn subcarriers(&self) -> usize {
        self.counts.subcarriers
    }

    /// Max transmit power of transmitter `node`.
    pub fn max_power(&self, node: usize) -> f64 {
        self.nodes[node].max_power_w.unwrap_or(0.0)
    }

    pub fn position(&self, node: usize, slot: usize) -> Position {
        self.nodes[node].trajectory[slot]
    }

    /// QoS target of vessel node `vessel`.
    pub fn qos_of(&self, vessel: usize) -> QosTarget {
        self.qos[vessel - self.counts.uavs - 1]
    }

    /// Overwrites every vessel's volume, keeping deadlines.
    pub fn set_qos_volumes(&mut self, volumes: &[f64]) -> Result<()> {
        if volumes.len() != self.qos.len() {
            return Err(Error::Dimension {
                expected: self.qos.len(),
                actual: volumes.len(),
            });
        }
        for (q, v) in self.qos.iter_mut().zip(volumes) {
            q.volume_bits = *v;
        }
        self.validate()
    }

    /// Link-count cap `E / (P * dt)` for a budgeted UAV, if any.
    pub fn uav_link_cap(&self, uav: usize) -> Option<f64> {
        let node = &self.nodes[uav];
        let budget = node.energy_budget_j?;
        Some(budget / (node.max_power_w? * self.radio.slot_seconds))
    }

    pub fn has_uav_budget(&self) -> bool {
        (1..=self.counts.uavs).any(|u| self.nodes[u].energy_budget_j.is_some())
    }

    /// Checks every model invariant.
    pub fn validate(&self) -> Result<()> {
        let c = &self.counts;
        if c.vessels == 0 {
            return Err(Error::Validation("at least one vessel is required".into()));
        }
        if c.relay_vessels > c.vessels {
            return Err(Error::Validation(format!(
                "relay_vessels ({}) exceeds vessels ({})",
                c.relay_vessels, c.vessels
            )));
        }
        if c.slots == 0 {
            return Err(Error::Validation("slots must be at least 1".into()));
        }
        if c.subcarriers == 0 || c.subcarriers > c.uavs + c.vessels {
            return Err(Error::Validation(format!(
                "subcarriers must lie in 1..={} (I+J), got {}",
                c.uavs + c.vessels,
                c.subcarriers
            )));
        }

        let r = &self.radio;
        for (name, v) in [
            ("radio.slot_seconds", r.slot_seconds),
            ("radio.subcarrier_bandwidth_hz", r.subcarrier_bandwidth_hz),
            ("radio.noise_power_w", r.noise_power_w),
            ("radio.carrier_mhz", r.carrier_mhz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [
            ("radio.env_constant_db", r.env_constant_db),
            ("radio.air.a", r.air.a),
            ("radio.air.b", r.air.b),
            ("radio.air.eta_los_db", r.air.eta_los_db),
            ("radio.air.eta_nlos_db", r.air.eta_nlos_db),
        ] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite")));
            }
        }

        let grid = self.grid();
        if self.nodes.len() != grid.nodes() {
            return Err(Error::Validation(format!(
                "expected {} nodes (1 + I + J), got {}",
                grid.nodes(),
                self.nodes.len()
            )));
        }
        for (id, node) in self.nodes.iter().enumerate() {
            let want = grid.role(id);
            if node.role != want {
                return Err(Error::Validation(format!(
                    "node {id} has role {:?}, expected {want:?}",
                    node.role
                )));
            }
            if node.trajectory.len() != c.slots {
                return Err(Error::Validation(format!(
                    "node {id} trajectory has {} waypoints, expected {}",
                    node.trajectory.len(),
                    c.slots
                )));
            }
            if let Some((t, p)) = node
                .trajectory
                .iter()
                .enumerate()
                .find(|(_, p)| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite() && p.z > 0.0))
            {
                return Err(Error::Validation(format!(
                    "node {id} waypoint {} is not finite with positive height: {:?}",
                    t + 1,
                    p
                )));
            }
            if grid.is_transmitter(id) {
                match node.max_power_w {
                    Some(p) if p.is_finite() && p > 0.0 => {}
                    other => {
                        return Err(Error::Validation(format!(
                            "transmitter {id} needs a positive max_power_w, got {other:?}"
                        )))
                    }
                }
            }
            if let Some(e) = node.energy_budget_j {
                if want != NodeRole::Uav {
                    return Err(Error::Validation(format!(
                        "energy_budget_j is only meaningful for UAVs (node {id})"
                    )));
                }
                if !(e.is_finite() && e >= 0.0) {
                    return Err(Error::Validation(format!("node {id} energy budget must be >= 0")));
                }
            }
        }

        if self.qos.len() != c.vessels {
            return Err(Error::Validation(format!(
                "expected {} QoS entries, got {}",
                c.vessels,
                self.qos.len()
            )));
        }
        for (k, q) in self.qos.iter().enumerate() {
            let vessel = c.uavs + 1 + k;
            if !(q.volume_bits.is_finite() && q.volume_bits >= 0.0) {
                return Err(Error::Validation(format!(
                    "vessel {vessel}: volume_bits must be >= 0, got {}",
                    q.volume_bits
                )));
            }
            if q.deadline_slot < 1 || q.deadline_slot > c.slots {
                return Err(Error::Validation(format!(
                    "vessel {vessel}: deadline_slot {} outside 1..={}",
                    q.deadline_slot, c.slots
                )));
            }
        }
        Ok(())
    }
}

/// `V_j = alpha * sum_t R[0][j][t] * dt` for every vessel, in vessel-id order.
pub fn qos_targets_from_alpha(scenario: &Scenario, csi: &CsiTensor, alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let dt = scenario.radio.slot_seconds;
    Ok(scenario
        .grid()
        .vessel_ids()
        .map(|j| {
            let direct: f64 = (0..scenario.slots()).map(|t| csi.peak_rate(0, j, t)).sum();
            alpha * direct * dt
        })
        .collect())
}
