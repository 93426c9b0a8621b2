use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::violations::{Family, ViolationSets};
use crate::channel::CsiTensor;
use crate::links::{ForcedZeroSet, LinkSlot, RateAllocation};
use crate::par::{self, Parallelism};
use crate::scenario::Scenario;
use crate::solver::{solve_relaxed, SolverOptions, SolverReport};
use crate::Result;

/// A relaxed solve kept for reuse.
#[derive(Debug, Clone)]
pub struct Solved {
    pub rates: RateAllocation,
    pub report: SolverReport,
}

impl Solved {
    pub fn energy(&self) -> f64 {
        self.report.energy()
    }
}

/// Relaxed solves memoized by forced-zero set. Safe to share between
/// probing threads.
pub struct Prober<'a> {
    scenario: &'a Scenario,
    csi: &'a CsiTensor,
    opts: SolverOptions,
    cache: Mutex<HashMap<ForcedZeroSet, Arc<Solved>>>,
}

impl<'a> Prober<'a> {
    pub fn new(scenario: &'a Scenario, csi: &'a CsiTensor, opts: SolverOptions) -> Self {
        Prober {
            scenario,
            csi,
            opts,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn solve(&self, zeros: &ForcedZeroSet) -> Result<Arc<Solved>> {
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(zeros) {
            return Ok(Arc::clone(hit));
        }
        let (rates, report) = solve_relaxed(self.scenario, self.csi, zeros, &self.opts)?;
        let solved = Arc::new(Solved { rates, report });
        let mut cache = self.cache.lock().expect("cache poisoned");
        Ok(Arc::clone(cache.entry(zeros.clone()).or_insert(solved)))
    }

    /// Number of distinct forced-zero sets solved so far.
    pub fn unique_solves(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }
}

/// Every valid link-slot touching `node` at `slot`.
fn touching(scenario: &Scenario, node: usize, slot: usize) -> impl Iterator<Item = LinkSlot> {
    let grid = scenario.grid();
    let incoming = (0..grid.transmitters()).map(move |tx| LinkSlot::new(tx, node, slot));
    let outgoing = (1..=grid.receivers()).map(move |rx| LinkSlot::new(node, rx, slot));
    incoming.chain(outgoing).filter(move |l| grid.is_valid(*l))
}

/// Links zeroed when `kept` is retained. For half-duplex this is every link
/// sharing an endpoint with `kept` in its slot; combinations that are not
/// links (a base station receiving, a sink transmitting) simply do not
/// occur. For the subcarrier and UAV budget families it is `kept` itself,
/// the link being removed.
pub fn conflict_neighborhood(kept: LinkSlot, scenario: &Scenario, family: Family) -> ForcedZeroSet {
    match family {
        Family::HalfDuplex => touching(scenario, kept.tx, kept.slot)
            .chain(touching(scenario, kept.rx, kept.slot))
            .filter(|l| *l != kept)
            .collect(),
        Family::Subcarrier | Family::UavBudget => [kept].into_iter().collect(),
    }
}

/// One candidate forced-zero set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Element chosen in the last violated slot.
    pub anchor: LinkSlot,
    /// Chosen element per violated slot, latest slot first.
    pub chain: Vec<LinkSlot>,
    /// Union of the chosen elements' neighborhoods, excluding the
    /// accumulated set.
    pub zeros: ForcedZeroSet,
}

#[derive(Debug, Clone)]
pub struct CandidateBatch {
    pub candidates: Vec<Candidate>,
    /// Probing solves issued while chaining backwards.
    pub probes: usize,
}

/// Index of the smallest value; ties and all-infinite inputs go to the
/// lowest index.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    best
}

/// One candidate per element of the last violated slot, each extended
/// backwards through every earlier violated slot by the element whose
/// neighborhood gives the lowest relaxed energy. The budget family spans the
/// whole horizon, so its candidates are single removals without chaining.
pub fn build_candidates(
    violations: &ViolationSets,
    accumulated: &ForcedZeroSet,
    prober: &Prober<'_>,
    parallelism: Parallelism,
) -> Result<CandidateBatch> {
    let scenario = prober.scenario();
    let family = violations.family;
    let Some(last) = violations.last_slot() else {
        return Ok(CandidateBatch {
            candidates: Vec::new(),
            probes: 0,
        });
    };
    if family == Family::UavBudget {
        let candidates = violations
            .per_slot
            .iter()
            .flatten()
            .map(|&e| Candidate {
                anchor: e,
                chain: vec![e],
                zeros: conflict_neighborhood(e, scenario, family),
            })
            .collect();
        return Ok(CandidateBatch { candidates, probes: 0 });
    }

    let chains = par::map(parallelism, &violations.per_slot[last], |&anchor| -> Result<(Candidate, usize)> {
        let mut partial = conflict_neighborhood(anchor, scenario, family);
        let mut chain = vec![anchor];
        let mut probes = 0;
        for t in (0..last).rev() {
            let set = &violations.per_slot[t];
            if set.is_empty() {
                continue;
            }
            let energies = par::map(parallelism, set, |&e| -> Result<f64> {
                let mut z = accumulated.union(&partial);
                z.extend_from(&conflict_neighborhood(e, scenario, family));
                Ok(prober.solve(&z)?.energy())
            })
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
            probes += set.len();
            let chosen = set[argmin(&energies)];
            partial.extend_from(&conflict_neighborhood(chosen, scenario, family));
            chain.push(chosen);
        }
        Ok((
            Candidate {
                anchor,
                chain,
                zeros: partial,
            },
            probes,
        ))
    });
    let mut candidates = Vec::with_capacity(chains.len());
    let mut probes = 0;
    for c in chains {
        let (cand, p) = c?;
        candidates.push(cand);
        probes += p;
    }
    Ok(CandidateBatch { candidates, probes })
}
