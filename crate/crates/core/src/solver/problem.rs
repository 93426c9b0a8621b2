//! Assembly of the relaxed problem in normalized variables `y = r / R`.

use std::collections::HashMap;

use crate::channel::CsiTensor;
use crate::links::{ForcedZeroSet, LinkSlot};
use crate::ratelink::{LinkEnergy, LinkState};
use crate::scenario::Scenario;

use super::ipm::Problem;

/// Links whose peak rate falls below this many bits/s carry nothing and are
/// removed from the problem.
pub(crate) const MIN_PEAK_RATE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowKind {
    HalfDuplex { node: usize, slot: usize },
    Subcarrier { slot: usize },
    Qos { vessel: usize, slot: usize },
    Causality { node: usize, slot: usize },
    UavBudget { uav: usize },
}

pub(crate) struct Row {
    pub kind: RowKind,
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

pub(crate) struct Relaxed {
    /// Dense link index of each variable.
    pub links: Vec<usize>,
    pub peak: Vec<f64>,
    pub energy: Vec<LinkEnergy>,
    pub rows: Vec<Row>,
    /// Objective normalization, the largest full-power slot energy.
    pub obj_scale: f64,
}

/// Result of assembling the problem: either a model or an immediate
/// infeasibility certificate.
pub(crate) enum Assembly {
    Model(Relaxed),
    Infeasible(String),
}

impl Relaxed {
    pub fn assemble(scenario: &Scenario, csi: &CsiTensor, zeros: &ForcedZeroSet) -> Assembly {
        let grid = scenario.grid();
        let radio = &scenario.radio;
        let dt = radio.slot_seconds;
        let forwarders = grid.forwarders();

        let mut links = Vec::new();
        let mut peak = Vec::new();
        let mut energy = Vec::new();
        let mut var_of: HashMap<LinkSlot, usize> = HashMap::new();
        for l in grid.links() {
            let k = grid.index(l).expect("valid link");
            let r = csi.peak_rate_at(k);
            // Relays hold nothing before the first slot, so they cannot send in it.
            if zeros.contains(&l) || r < MIN_PEAK_RATE || (l.slot == 0 && forwarders.contains(&l.tx)) {
                continue;
            }
            let state = LinkState {
                beta: csi.beta_at(k),
                sigma2: radio.noise_power_w,
                bandwidth: radio.subcarrier_bandwidth_hz,
                dt,
            };
            var_of.insert(l, links.len());
            links.push(k);
            peak.push(r);
            energy.push(LinkEnergy::new(&state));
        }
        let var = |l: LinkSlot| var_of.get(&l).copied();
        let incoming = |node: usize, slot: usize| {
            (0..grid.transmitters())
                .filter(move |&tx| tx != node)
                .filter_map(move |tx| var(LinkSlot::new(tx, node, slot)))
        };
        let outgoing = |node: usize, slot: usize| {
            grid.is_transmitter(node)
                .then(|| {
                    (1..=grid.receivers())
                        .filter(move |&rx| rx != node)
                        .filter_map(move |rx| var(LinkSlot::new(node, rx, slot)))
                })
                .into_iter()
                .flatten()
        };

        let mut rows = Vec::new();
        let t_count = grid.slots;

        for slot in 0..t_count {
            for node in 1..=grid.receivers() {
                let coefs: Vec<(usize, f64)> = grid
                    .incident(node, slot)
                    .filter_map(var)
                    .map(|v| (v, 1.0))
                    .collect();
                if coefs.len() >= 2 {
                    rows.push(Row {
                        kind: RowKind::HalfDuplex { node, slot },
                        coefs,
                        rhs: 1.0,
                    });
                }
            }
            let coefs: Vec<(usize, f64)> = grid.links_in_slot(slot).filter_map(var).map(|v| (v, 1.0)).collect();
            if coefs.len() > scenario.subcarriers() {
                rows.push(Row {
                    kind: RowKind::Subcarrier { slot },
                    coefs,
                    rhs: scenario.subcarriers() as f64,
                });
            }
        }

        // Cumulative held volume (in units of bits, without dt) of `node` up to `slot`.
        let held = |node: usize, slot: usize| -> Vec<(usize, f64)> {
            let mut coefs = Vec::new();
            for tau in 0..=slot {
                coefs.extend(incoming(node, tau).map(|v| (v, peak[v] * dt)));
                coefs.extend(outgoing(node, tau).map(|v| (v, -peak[v] * dt)));
            }
            coefs
        };

        for vessel in grid.vessel_ids() {
            let q = scenario.qos_of(vessel);
            if q.volume_bits <= 0.0 {
                continue;
            }
            let deadline = q.deadline_slot - 1;
            let is_relay = forwarders.contains(&vessel);
            let mut check = vec![deadline];
            if is_relay {
                check.extend((deadline + 1..t_count).filter(|&t| outgoing(vessel, t).next().is_some()));
            }
            for slot in check {
                let coefs = held(vessel, slot);
                let reachable: f64 = coefs.iter().filter(|c| c.1 > 0.0).map(|c| c.1).sum();
                if reachable < q.volume_bits * (1.0 - 1e-12) {
                    return Assembly::Infeasible(format!(
                        "vessel {vessel} can receive at most {reachable:.6e} bits by slot {} but needs {:.6e}",
                        slot + 1,
                        q.volume_bits
                    ));
                }
                rows.push(Row {
                    kind: RowKind::Qos { vessel, slot },
                    coefs: coefs.into_iter().map(|(v, c)| (v, -c)).collect(),
                    rhs: -q.volume_bits,
                });
            }
        }

        for node in forwarders.clone() {
            for slot in 0..t_count.saturating_sub(1) {
                let next: Vec<usize> = outgoing(node, slot + 1).collect();
                if next.is_empty() {
                    continue;
                }
                let mut coefs: Vec<(usize, f64)> = held(node, slot).into_iter().map(|(v, c)| (v, -c)).collect();
                coefs.extend(next.into_iter().map(|v| (v, peak[v] * dt)));
                rows.push(Row {
                    kind: RowKind::Causality { node, slot },
                    coefs,
                    rhs: 0.0,
                });
            }
        }

        for uav in 1..=grid.uavs {
            if let Some(cap) = scenario.uav_link_cap(uav) {
                let coefs: Vec<(usize, f64)> = (0..t_count).flat_map(|t| outgoing(uav, t)).map(|v| (v, 1.0)).collect();
                if coefs.len() as f64 > cap {
                    rows.push(Row {
                        kind: RowKind::UavBudget { uav },
                        coefs,
                        rhs: cap,
                    });
                }
            }
        }

        for row in &mut rows {
            let scale = row.coefs.iter().fold(0.0f64, |m, c| m.max(c.1.abs()));
            if scale > 0.0 {
                for c in &mut row.coefs {
                    c.1 /= scale;
                }
                row.rhs /= scale;
            }
        }

        let obj_scale = (0..grid.transmitters())
            .map(|tx| scenario.max_power(tx) * dt)
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);

        Assembly::Model(Relaxed {
            links,
            peak,
            energy,
            rows,
            obj_scale,
        })
    }

    pub fn n(&self) -> usize {
        self.links.len()
    }

    /// IPM problem; QoS rows get elastic slacks appended after the link
    /// variables, in row order.
    pub fn to_ipm(&self) -> (Problem, Vec<usize>) {
        let n = self.n();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut elastic_rows = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(v, a) in &row.coefs {
                cols[v].push((i, a));
            }
            if matches!(row.kind, RowKind::Qos { .. }) {
                elastic_rows.push(i);
            }
        }
        for &i in &elastic_rows {
            cols.push(vec![(i, -1.0)]);
        }
        let total = cols.len();
        let mut lo = vec![0.0; total];
        let mut hi = vec![1.0; total];
        for k in n..total {
            lo[k] = 0.0;
            hi[k] = f64::INFINITY;
        }
        (
            Problem {
                lo,
                hi,
                cols,
                b: self.rows.iter().map(|r| r.rhs).collect(),
            },
            elastic_rows,
        )
    }

    /// Normalized objective term of variable `v` at `y`.
    pub fn phi(&self, v: usize, y: f64) -> (f64, f64, f64) {
        let r = self.peak[v];
        let (e, g, h) = self.energy[v].eval(r * y.max(0.0));
        let s = self.obj_scale;
        (e / s, g * r / s, h * r * r / s)
    }
}
