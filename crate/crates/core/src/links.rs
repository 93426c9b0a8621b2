//! Link-slot indexing shared by every tensor in the crate.
//!
//! Node ids follow one convention everywhere: `0` is the shore base station,
//! `1..=I` are UAVs, `I+1..=I+J'` are relay vessels and `I+J'+1..=I+J` are
//! sink vessels. Transmitters are `0..=I+J'`, receivers are `1..=I+J`.
//! Slots are 0-based in memory and 1-based in every external format.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A directed link `tx -> rx` during one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkSlot {
    pub tx: usize,
    pub rx: usize,
    /// 0-based slot index.
    pub slot: usize,
}

impl LinkSlot {
    pub const fn new(tx: usize, rx: usize, slot: usize) -> Self {
        LinkSlot { tx, rx, slot }
    }
}

impl fmt::Display for LinkSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}@{}", self.tx, self.rx, self.slot + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    ShoreBs,
    Uav,
    RelayVessel,
    SinkVessel,
}

impl NodeRole {
    pub fn is_vessel(self) -> bool {
        matches!(self, NodeRole::RelayVessel | NodeRole::SinkVessel)
    }
}

/// Shape of the link tensor: counts of each node class and the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkGrid {
    pub uavs: usize,
    pub vessels: usize,
    pub relays: usize,
    pub slots: usize,
}

impl LinkGrid {
    pub fn new(uavs: usize, vessels: usize, relays: usize, slots: usize) -> Self {
        LinkGrid {
            uavs,
            vessels,
            relays,
            slots,
        }
    }

    /// Number of transmitters, `I + J' + 1`.
    pub fn transmitters(&self) -> usize {
        self.uavs + self.relays + 1
    }

    /// Number of receivers, `I + J`.
    pub fn receivers(&self) -> usize {
        self.uavs + self.vessels
    }

    /// Total node count including the base station.
    pub fn nodes(&self) -> usize {
        self.uavs + self.vessels + 1
    }

    pub fn role(&self, node: usize) -> NodeRole {
        if node == 0 {
            NodeRole::ShoreBs
        } else if node <= self.uavs {
            NodeRole::Uav
        } else if node <= self.uavs + self.relays {
            NodeRole::RelayVessel
        } else {
            NodeRole::SinkVessel
        }
    }

    pub fn is_transmitter(&self, node: usize) -> bool {
        node < self.transmitters()
    }

    pub fn is_receiver(&self, node: usize) -> bool {
        node >= 1 && node <= self.receivers()
    }

    /// Nodes that both receive and forward (UAVs and relay vessels).
    pub fn forwarders(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.uavs + self.relays
    }

    pub fn vessel_ids(&self) -> std::ops::RangeInclusive<usize> {
        self.uavs + 1..=self.uavs + self.vessels
    }

    pub fn is_valid_pair(&self, tx: usize, rx: usize) -> bool {
        tx != rx && self.is_transmitter(tx) && self.is_receiver(rx)
    }

    pub fn is_valid(&self, link: LinkSlot) -> bool {
        self.is_valid_pair(link.tx, link.rx) && link.slot < self.slots
    }

    /// Length of the dense tensor, diagonal entries included.
    pub fn len(&self) -> usize {
        self.transmitters() * self.receivers() * self.slots
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of a link; `None` when it is not a valid link-slot.
    pub fn index(&self, link: LinkSlot) -> Option<usize> {
        self.is_valid(link).then(|| self.raw_index(link))
    }

    fn raw_index(&self, link: LinkSlot) -> usize {
        (link.tx * self.receivers() + (link.rx - 1)) * self.slots + link.slot
    }

    pub fn link(&self, index: usize) -> LinkSlot {
        let slot = index % self.slots;
        let pair = index / self.slots;
        LinkSlot {
            tx: pair / self.receivers(),
            rx: pair % self.receivers() + 1,
            slot,
        }
    }

    /// All valid link-slots in flat-index order.
    pub fn links(&self) -> impl Iterator<Item = LinkSlot> + '_ {
        (0..self.len())
            .map(|k| self.link(k))
            .filter(|l| l.tx != l.rx)
    }

    /// Valid links active in slot `slot`, ordered by `(tx, rx)`.
    pub fn links_in_slot(&self, slot: usize) -> impl Iterator<Item = LinkSlot> + '_ {
        (0..self.transmitters()).flat_map(move |tx| {
            (1..=self.receivers())
                .filter(move |&rx| rx != tx)
                .map(move |rx| LinkSlot::new(tx, rx, slot))
        })
    }

    /// Links touching `node` in `slot`: incoming first, then outgoing.
    pub fn incident(&self, node: usize, slot: usize) -> impl Iterator<Item = LinkSlot> + '_ {
        let incoming = self
            .is_receiver(node)
            .then(|| (0..self.transmitters()).filter(move |&tx| tx != node))
            .into_iter()
            .flatten()
            .map(move |tx| LinkSlot::new(tx, node, slot));
        let outgoing = self
            .is_transmitter(node)
            .then(|| (1..=self.receivers()).filter(move |&rx| rx != node))
            .into_iter()
            .flatten()
            .map(move |rx| LinkSlot::new(node, rx, slot));
        incoming.chain(outgoing)
    }
}

/// Link-slots pinned to zero rate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ForcedZeroSet(BTreeSet<LinkSlot>);

impl ForcedZeroSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, link: LinkSlot) -> bool {
        self.0.insert(link)
    }

    pub fn contains(&self, link: &LinkSlot) -> bool {
        self.0.contains(link)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LinkSlot> {
        self.0.iter()
    }

    pub fn extend_from(&mut self, other: &ForcedZeroSet) {
        self.0.extend(other.0.iter().copied());
    }

    pub fn union(&self, other: &ForcedZeroSet) -> ForcedZeroSet {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn is_subset(&self, other: &ForcedZeroSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Rejects triples that are not valid link-slots of `grid`.
    pub fn validate(&self, grid: &LinkGrid) -> crate::Result<()> {
        match self.0.iter().find(|l| !grid.is_valid(**l)) {
            Some(bad) => Err(crate::Error::Validation(format!(
                "forced-zero triple {bad} is not a valid link-slot"
            ))),
            None => Ok(()),
        }
    }
}

impl FromIterator<LinkSlot> for ForcedZeroSet {
    fn from_iter<I: IntoIterator<Item = LinkSlot>>(iter: I) -> Self {
        ForcedZeroSet(iter.into_iter().collect())
    }
}

impl Extend<LinkSlot> for ForcedZeroSet {
    fn extend<I: IntoIterator<Item = LinkSlot>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

/// Continuous rates `r[i][j][t]` in bits/s; diagonal entries stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation {
    grid: LinkGrid,
    rates: Vec<f64>,
}

impl RateAllocation {
    pub fn zeros(grid: LinkGrid) -> Self {
        RateAllocation {
            grid,
            rates: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &LinkGrid {
        &self.grid
    }

    pub fn get(&self, link: LinkSlot) -> f64 {
        self.grid.index(link).map_or(0.0, |k| self.rates[k])
    }

    /// Panics when `link` is not a valid link-slot.
    pub fn set(&mut self, link: LinkSlot, rate: f64) {
        let k = self
            .grid
            .index(link)
            .unwrap_or_else(|| panic!("invalid link-slot {link}"));
        self.rates[k] = rate;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rates
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.rates
    }

    /// Nonzero entries as `(link, rate)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (LinkSlot, f64)> + '_ {
        self.rates
            .iter()
            .enumerate()
            .filter(|(_, r)| **r != 0.0)
            .map(|(k, r)| (self.grid.link(k), *r))
    }
}

/// Binary scheduling indicators `delta[i][j][t]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    grid: LinkGrid,
    active: Vec<bool>,
}

impl Schedule {
    pub fn empty(grid: LinkGrid) -> Self {
        Schedule {
            grid,
            active: vec![false; grid.len()],
        }
    }

    pub fn grid(&self) -> &LinkGrid {
        &self.grid
    }

    pub fn is_active(&self, link: LinkSlot) -> bool {
        self.grid.index(link).is_some_and(|k| self.active[k])
    }

    pub fn set(&mut self, link: LinkSlot, on: bool) {
        let k = self
            .grid
            .index(link)
            .unwrap_or_else(|| panic!("invalid link-slot {link}"));
        self.active[k] = on;
    }

    pub fn active_links(&self) -> impl Iterator<Item = LinkSlot> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, on)| **on)
            .map(|(k, _)| self.grid.link(k))
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn active_in_slot(&self, slot: usize) -> usize {
        self.grid
            .links_in_slot(slot)
            .filter(|l| self.is_active(*l))
            .count()
    }

    /// Half-duplex load `S^delta` of `node` in `slot`: incoming plus
    /// outgoing for forwarders, incoming only for sinks.
    pub fn node_load(&self, node: usize, slot: usize) -> usize {
        self.grid
            .incident(node, slot)
            .filter(|l| self.is_active(*l))
            .count()
    }
}
