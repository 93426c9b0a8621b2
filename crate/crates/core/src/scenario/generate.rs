use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Counts, Node, Position, QosTarget, Radio, Scenario};
use crate::links::LinkGrid;
use crate::{Error, Result};

const MAX_ATTEMPTS: usize = 1_000_000;

/// Restricts the last vessels' lanes to the region far from the base station
/// and sends the UAV from near the base station into that region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageHole {
    /// Number of trailing vessels confined to the hole.
    pub vessels: usize,
    /// Every waypoint of a confined lane lies farther than this from the BS.
    pub min_bs_distance_m: f64,
    /// The UAV starts within this distance of the BS.
    pub uav_start_max_distance_m: f64,
}

impl Default for CoverageHole {
    fn default() -> Self {
        CoverageHole {
            vessels: 4,
            min_bs_distance_m: 5000.0,
            uav_start_max_distance_m: 3000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyParams {
    pub seed: u64,
    pub side_m: f64,
    pub uavs: usize,
    pub vessels: usize,
    pub relay_vessels: usize,
    pub slots: usize,
    pub subcarriers: usize,
    pub vessel_speed_mps: f64,
    pub uav_speed_mps: f64,
    pub bs_height_m: f64,
    pub uav_height_m: f64,
    pub vessel_height_m: f64,
    pub bs_power_w: f64,
    /// Power cap of UAVs and relay vessels.
    pub relay_power_w: f64,
    /// Offset applied to every power cap, `P' = P * 10^(dP/10)`.
    pub power_offset_db: f64,
    /// This many trailing vessels get deadline `T - 1` instead of `T`.
    pub early_deadline_vessels: usize,
    pub uav_energy_budget_j: Option<f64>,
    pub coverage_hole: Option<CoverageHole>,
    pub radio: Radio,
}

impl TopologyParams {
    /// One BS on the edge of a 5 km square, one UAV, eight relay vessels and
    /// one sink, ten 30 s slots and nine subcarriers.
    pub fn standard(seed: u64) -> Self {
        TopologyParams {
            seed,
            side_m: 5000.0,
            uavs: 1,
            vessels: 9,
            relay_vessels: 8,
            slots: 10,
            subcarriers: 9,
            vessel_speed_mps: 6.0,
            uav_speed_mps: 10.0,
            bs_height_m: 50.0,
            uav_height_m: 100.0,
            vessel_height_m: 5.0,
            bs_power_w: 50.0,
            relay_power_w: 10.0,
            power_offset_db: 0.0,
            early_deadline_vessels: 2,
            uav_energy_budget_j: None,
            coverage_hole: None,
            radio: Radio::maritime_default(),
        }
    }

    /// The standard layout with four vessels confined to a coverage hole.
    pub fn coverage_hole(seed: u64, power_offset_db: f64) -> Self {
        TopologyParams {
            power_offset_db,
            early_deadline_vessels: 0,
            coverage_hole: Some(CoverageHole::default()),
            ..Self::standard(seed)
        }
    }

    /// Smallest instance with a relay: one relay and one sink vessel on a
    /// 4 km square, two slots and a single subcarrier. Small enough for
    /// exhaustive search.
    pub fn tiny(seed: u64) -> Self {
        TopologyParams {
            side_m: 4000.0,
            uavs: 0,
            vessels: 2,
            relay_vessels: 1,
            slots: 2,
            subcarriers: 1,
            early_deadline_vessels: 0,
            ..Self::standard(seed)
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            uavs: self.uavs,
            vessels: self.vessels,
            relay_vessels: self.relay_vessels,
            slots: self.slots,
            subcarriers: self.subcarriers,
        }
    }
}

/// Samples a random instance. QoS volumes are left at zero; fill them with
/// [`super::qos_targets_from_alpha`].
pub fn generate_random_topology(params: &TopologyParams) -> Result<Scenario> {
    if params.vessels == 0 {
        return Err(Error::Validation("at least one vessel is required".into()));
    }
    if !(params.side_m.is_finite() && params.side_m > 0.0) {
        return Err(Error::Validation("side_m must be positive".into()));
    }
    for (name, v) in [("vessel_speed_mps", params.vessel_speed_mps), ("uav_speed_mps", params.uav_speed_mps)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Validation(format!("{name} must be >= 0")));
        }
    }
    let counts = params.counts();
    let grid = LinkGrid::new(counts.uavs, counts.vessels, counts.relay_vessels, counts.slots);
    let slots = params.slots.max(1);
    let dt = params.radio.slot_seconds;
    let side = params.side_m;
    let scale = 10f64.powf(params.power_offset_db / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let bs = Position::new(rng.gen_range(0.0..=side), 0.0, params.bs_height_m);
    let far_from_bs = |p: &Position, min: f64| p.horizontal_distance(&bs) > min;
    let hole_start = params
        .coverage_hole
        .map(|h| params.vessels.saturating_sub(h.vessels))
        .unwrap_or(params.vessels);

    let mut nodes = Vec::with_capacity(grid.nodes());
    nodes.push(Node {
        role: grid.role(0),
        max_power_w: Some(params.bs_power_w * scale),
        energy_budget_j: None,
        trajectory: vec![bs; slots],
    });

    for _ in 0..params.uavs {
        let trajectory = match params.coverage_hole {
            Some(hole) => {
                let start = sample_point(&mut rng, side, params.uav_height_m, |p| {
                    p.horizontal_distance(&bs) < hole.uav_start_max_distance_m
                })?;
                let end = sample_point(&mut rng, side, params.uav_height_m, |p| {
                    far_from_bs(p, hole.min_bs_distance_m)
                })?;
                interpolate(start, end, slots)
            }
            None => sample_lane(&mut rng, side, params.uav_speed_mps * dt, slots, params.uav_height_m, |_| true)?,
        };
        nodes.push(Node {
            role: grid.role(nodes.len()),
            max_power_w: Some(params.relay_power_w * scale),
            energy_budget_j: params.uav_energy_budget_j,
            trajectory,
        });
    }

    for k in 0..params.vessels {
        let id = nodes.len();
        let min_dist = match params.coverage_hole {
            Some(h) if k >= hole_start => h.min_bs_distance_m,
            _ => -1.0,
        };
        let trajectory = sample_lane(
            &mut rng,
            side,
            params.vessel_speed_mps * dt,
            slots,
            params.vessel_height_m,
            |p| far_from_bs(p, min_dist),
        )?;
        nodes.push(Node {
            role: grid.role(id),
            max_power_w: grid.is_transmitter(id).then_some(params.relay_power_w * scale),
            energy_budget_j: None,
            trajectory,
        });
    }

    let early_from = params.vessels.saturating_sub(params.early_deadline_vessels);
    let qos = (0..params.vessels)
        .map(|k| QosTarget {
            volume_bits: 0.0,
            deadline_slot: if k >= early_from && slots > 1 { slots - 1 } else { slots },
        })
        .collect();

    let scenario = Scenario {
        counts,
        radio: params.radio,
        nodes,
        qos,
        metadata: Some(serde_json::json!({ "generator": params })),
    };
    scenario.validate()?;
    Ok(scenario)
}

fn sample_point(
    rng: &mut ChaCha8Rng,
    side: f64,
    height: f64,
    accept: impl Fn(&Position) -> bool,
) -> Result<Position> {
    for _ in 0..MAX_ATTEMPTS {
        let p = Position::new(rng.gen_range(0.0..=side), rng.gen_range(0.0..=side), height);
        if accept(&p) {
            return Ok(p);
        }
    }
    Err(Error::Validation("could not place a point in the requested region".into()))
}

/// A straight lane covering `step` meters per slot, entirely inside the square
/// and accepted waypoint-by-waypoint.
fn sample_lane(
    rng: &mut ChaCha8Rng,
    side: f64,
    step: f64,
    slots: usize,
    height: f64,
    accept: impl Fn(&Position) -> bool,
) -> Result<Vec<Position>> {
    let inside = |p: &Position| (0.0..=side).contains(&p.x) && (0.0..=side).contains(&p.y);
    for _ in 0..MAX_ATTEMPTS {
        let start = Position::new(rng.gen_range(0.0..=side), rng.gen_range(0.0..=side), height);
        let heading = rng.gen_range(0.0..2.0 * PI);
        let (dx, dy) = (step * heading.cos(), step * heading.sin());
        let lane: Vec<Position> = (0..slots)
            .map(|t| Position::new(start.x + t as f64 * dx, start.y + t as f64 * dy, height))
            .collect();
        if lane.iter().all(|p| inside(p) && accept(p)) {
            return Ok(lane);
        }
    }
    Err(Error::Validation(format!(
        "no straight lane of {:.0} m fits the requested region",
        step * (slots - 1) as f64
    )))
}

fn interpolate(start: Position, end: Position, slots: usize) -> Vec<Position> {
    if slots == 1 {
        return vec![start];
    }
    (0..slots)
        .map(|t| {
            let s = t as f64 / (slots - 1) as f64;
            Position::new(
                start.x + s * (end.x - start.x),
                start.y + s * (end.y - start.y),
                start.z + s * (end.z - start.z),
            )
        })
        .collect()
}
