use serde::{Deserialize, Serialize};

use crate::channel::CsiTensor;
use crate::links::{LinkSlot, RateAllocation, Schedule};
use crate::scenario::Scenario;
use crate::solver::uav_budget_ok;

/// Integral constraint family handled by one scheduler loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// At most one active incident link per node and slot.
    HalfDuplex,
    /// At most `N` active links per slot.
    Subcarrier,
    /// At most `E / (P dt)` active transmissions per budgeted UAV.
    UavBudget,
}

impl Family {
    /// Numeric tag used in reports: 1, 2 or 3.
    pub fn tag(self) -> u8 {
        match self {
            Family::HalfDuplex => 1,
            Family::Subcarrier => 2,
            Family::UavBudget => 3,
        }
    }
}

/// Active links involved in a violated constraint, grouped by slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationSets {
    pub family: Family,
    /// `per_slot[t]` is sorted and free of duplicates.
    pub per_slot: Vec<Vec<LinkSlot>>,
    /// Number of violated constraints (node-slots, slots or UAVs).
    pub violated: usize,
}

impl ViolationSets {
    pub fn is_empty(&self) -> bool {
        self.per_slot.iter().all(Vec::is_empty)
    }

    /// Last slot with a nonempty set.
    pub fn last_slot(&self) -> Option<usize> {
        self.per_slot.iter().rposition(|v| !v.is_empty())
    }

    pub fn len(&self) -> usize {
        self.per_slot.iter().map(Vec::len).sum()
    }
}

/// `delta = 1` iff `r > eps_rel R`; rates at or below the threshold are
/// zeroed in the returned allocation.
pub fn detach_schedule(rates: &RateAllocation, csi: &CsiTensor, eps_rel: f64) -> (Schedule, RateAllocation) {
    let grid = *rates.grid();
    let mut schedule = Schedule::empty(grid);
    let mut kept = RateAllocation::zeros(grid);
    for (l, r) in rates.nonzero() {
        if r > eps_rel * csi.peak_rate(l.tx, l.rx, l.slot) {
            schedule.set(l, true);
            kept.set(l, r);
        }
    }
    (schedule, kept)
}

/// Every active link taking part in a violated constraint of `family`.
pub fn violation_sets(schedule: &Schedule, scenario: &Scenario, family: Family) -> ViolationSets {
    let grid = scenario.grid();
    let mut per_slot = vec![Vec::new(); grid.slots];
    let mut violated = 0;
    match family {
        Family::HalfDuplex => {
            for (t, set) in per_slot.iter_mut().enumerate() {
                for node in 1..=grid.receivers() {
                    if schedule.node_load(node, t) >= 2 {
                        violated += 1;
                        set.extend(grid.incident(node, t).filter(|l| schedule.is_active(*l)));
                    }
                }
            }
        }
        Family::Subcarrier => {
            for (t, set) in per_slot.iter_mut().enumerate() {
                if schedule.active_in_slot(t) > scenario.subcarriers() {
                    violated += 1;
                    set.extend(grid.links_in_slot(t).filter(|l| schedule.is_active(*l)));
                }
            }
        }
        Family::UavBudget => {
            for uav in 1..=grid.uavs {
                if !uav_budget_ok(schedule, scenario, uav) {
                    violated += 1;
                    for l in schedule.active_links().filter(|l| l.tx == uav) {
                        per_slot[l.slot].push(l);
                    }
                }
            }
        }
    }
    for set in &mut per_slot {
        set.sort_unstable();
        set.dedup();
    }
    ViolationSets {
        family,
        per_slot,
        violated,
    }
}

/// Excess active links over `N`, summed over slots.
pub fn subcarrier_excess(schedule: &Schedule, scenario: &Scenario) -> usize {
    (0..scenario.slots())
        .map(|t| schedule.active_in_slot(t).saturating_sub(scenario.subcarriers()))
        .sum()
}
