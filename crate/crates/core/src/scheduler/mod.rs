//! Integer recovery: turns the relaxed rates into a binary schedule.
//!
//! Starting from the relaxed optimum, the scheduler detaches a schedule,
//! finds the links involved in violated half-duplex constraints, builds one
//! candidate forced-zero set per conflicting link in the last violated slot
//! (chained backwards through earlier slots), and keeps the candidate whose
//! relaxed energy grows the least. The same loop then removes links from
//! slots that use more than `N` subcarriers, and, when UAV energy budgets are
//! configured, from UAVs that transmit too often. Rounds repeat until a
//! detached schedule violates nothing, followed by a final solve with every
//! inactive link pinned to zero.

mod candidates;
mod violations;

use serde::{Deserialize, Serialize};

use crate::channel::CsiTensor;
use crate::links::{ForcedZeroSet, RateAllocation, Schedule};
use crate::par::{self, Parallelism};
use crate::ratelink::total_energy;
use crate::scenario::Scenario;
use crate::solver::{constraint_residuals, schedule_violations, ResidualReport, SolverOptions};
use crate::{Error, Result};

pub(crate) use candidates::argmin;
pub use candidates::{build_candidates, conflict_neighborhood, Candidate, CandidateBatch, Prober, Solved};
pub use violations::{detach_schedule, subcarrier_excess, violation_sets, Family, ViolationSets};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    /// A link is active iff its rate exceeds this fraction of its peak rate.
    pub eps_rel: f64,
    pub solver: SolverOptions,
    pub parallelism: Parallelism,
    /// Fail when an iteration or subproblem bound is exceeded.
    pub enforce_bounds: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            eps_rel: 1e-6,
            solver: SolverOptions::default(),
            parallelism: Parallelism::default(),
            enforce_bounds: true,
        }
    }
}

/// Iteration bound `[2(I+J) - N] T` and probing-subproblem bound
/// `(I+J)^2 (T-1) T [(I+J)^2 + (I+J) - N]`.
pub fn iteration_bounds(uavs: usize, vessels: usize, subcarriers: usize, slots: usize) -> (usize, u128) {
    let k = (uavs + vessels) as u128;
    let n = subcarriers as u128;
    let t = slots as u128;
    let s_max = (2 * k).saturating_sub(n) * t;
    let sub = k * k * t.saturating_sub(1) * t * (k * k + k).saturating_sub(n);
    (s_max as usize, sub)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number across all families.
    pub s: usize,
    pub x: u8,
    /// Violated constraints before this iteration.
    pub violated: usize,
    /// Relaxed energy of each candidate; `None` when infeasible.
    pub candidates: Vec<Option<f64>>,
    pub chosen: usize,
    /// Relaxed energy after accepting the chosen candidate.
    pub energy: f64,
    /// Probing solves issued while building the candidates.
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerStats {
    /// Half-duplex iterations.
    pub s1: usize,
    /// Subcarrier iterations.
    pub s2: usize,
    /// UAV budget iterations.
    pub s3: usize,
    /// Passes over the three families; the last pass finds nothing.
    pub rounds: usize,
    pub iteration_bound: usize,
    /// Probing subproblems solved while chaining candidates backwards.
    pub subproblems: usize,
    pub subproblem_bound: u128,
    pub subproblem_ratio: f64,
    /// Relaxed solves of complete candidates.
    pub candidate_solves: usize,
    /// Distinct forced-zero sets solved, including the first and last solve.
    pub unique_solves: usize,
    /// Relaxed optimum before any forced zeros, a lower bound on `energy_j`.
    pub relaxed_energy_j: f64,
    pub energy_j: f64,
    pub detach_threshold: f64,
    /// Every active link incident to a violated constraint is a conflict.
    pub violation_reading: String,
    pub uav_budget_active: bool,
    pub forced_zeros: usize,
    pub residuals: ResidualReport,
    pub per_iteration: Vec<IterationRecord>,
}

/// Runs the scheduler from the empty forced-zero set.
pub fn run_scheduler(
    scenario: &Scenario,
    csi: &CsiTensor,
    config: &SchedulerConfig,
) -> Result<(Schedule, RateAllocation, SchedulerStats)> {
    run_scheduler_with_zeros(scenario, csi, &ForcedZeroSet::new(), config)
}

/// Runs the scheduler with `base` pinned to zero throughout.
pub fn run_scheduler_with_zeros(
    scenario: &Scenario,
    csi: &CsiTensor,
    base: &ForcedZeroSet,
    config: &SchedulerConfig,
) -> Result<(Schedule, RateAllocation, SchedulerStats)> {
    base.validate(&scenario.grid())?;
    let counts = scenario.counts;
    let (s_max, sub_bound) = iteration_bounds(counts.uavs, counts.vessels, counts.subcarriers, counts.slots);
    let k = counts.uavs + counts.vessels;
    let s1_max = k * counts.slots;
    let s2_max = k.saturating_sub(counts.subcarriers) * counts.slots;

    let prober = Prober::new(scenario, csi, config.solver);
    let mut acc = base.clone();
    let mut current = prober.solve(&acc)?;
    if !current.report.is_feasible() {
        return Err(Error::Infeasible(
            current.report.certificate.clone().unwrap_or_else(|| "relaxed problem infeasible".into()),
        ));
    }
    let relaxed_energy = current.energy();

    let mut iters = [0usize; 3];
    let mut records = Vec::new();
    let mut subproblems = 0;
    let mut candidate_solves = 0;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut progressed = false;
        for family in [Family::HalfDuplex, Family::Subcarrier, Family::UavBudget] {
            loop {
                let (schedule, _) = detach_schedule(&current.rates, csi, config.eps_rel);
                let v = violation_sets(&schedule, scenario, family);
                if v.is_empty() {
                    break;
                }
                progressed = true;
                let slot = family.tag() as usize - 1;
                iters[slot] += 1;
                let s = iters.iter().sum::<usize>();
                if config.enforce_bounds {
                    let exceeded = match family {
                        Family::HalfDuplex => iters[0] > s1_max,
                        Family::Subcarrier => iters[1] > s2_max,
                        Family::UavBudget => false,
                    } || iters[0] + iters[1] > s_max;
                    if exceeded {
                        return Err(Error::IterationBound(format!(
                            "s1 = {}, s2 = {} against (I+J)T = {s1_max}, (I+J-N)T = {s2_max}, total {s_max}; \
                             {} constraints of family {} still violated",
                            iters[0],
                            iters[1],
                            v.violated,
                            family.tag()
                        )));
                    }
                }

                let batch = build_candidates(&v, &acc, &prober, config.parallelism)?;
                subproblems += batch.probes;
                candidate_solves += batch.candidates.len();
                let solved = par::map(config.parallelism, &batch.candidates, |c| prober.solve(&acc.union(&c.zeros)))
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?;
                let energies: Vec<f64> = solved.iter().map(|s| s.energy()).collect();
                let chosen = candidates::argmin(&energies);
                if !energies[chosen].is_finite() {
                    return Err(Error::CandidatesExhausted {
                        iteration: s,
                        family: family.tag(),
                        candidates: energies.len(),
                    });
                }
                acc.extend_from(&batch.candidates[chosen].zeros);
                current = solved[chosen].clone();
                records.push(IterationRecord {
                    s,
                    x: family.tag(),
                    violated: v.violated,
                    candidates: energies.iter().map(|e| e.is_finite().then_some(*e)).collect(),
                    chosen,
                    energy: current.energy(),
                    probes: batch.probes,
                });
            }
        }
        if !progressed {
            break;
        }
    }
    if config.enforce_bounds && subproblems as u128 > sub_bound {
        return Err(Error::IterationBound(format!(
            "{subproblems} probing subproblems against a bound of {sub_bound}"
        )));
    }

    // Pin every inactive link and re-solve so the returned rates carry no
    // sub-threshold residue.
    let (schedule, kept) = detach_schedule(&current.rates, csi, config.eps_rel);
    let mut terminal = acc.clone();
    terminal.extend(scenario.grid().links().filter(|l| !schedule.is_active(*l)));
    let polished = prober.solve(&terminal)?;
    let (schedule, rates) = if polished.report.is_feasible() {
        detach_schedule(&polished.rates, csi, config.eps_rel)
    } else {
        (schedule, kept)
    };
    debug_assert!(schedule_violations(&schedule, scenario).is_clean());

    let energy = total_energy(&rates, csi, scenario)?;
    let stats = SchedulerStats {
        s1: iters[0],
        s2: iters[1],
        s3: iters[2],
        rounds,
        iteration_bound: s_max,
        subproblems,
        subproblem_bound: sub_bound,
        subproblem_ratio: if sub_bound > 0 { subproblems as f64 / sub_bound as f64 } else { 0.0 },
        candidate_solves,
        unique_solves: prober.unique_solves(),
        relaxed_energy_j: relaxed_energy,
        energy_j: energy,
        detach_threshold: config.eps_rel,
        violation_reading: "broad".into(),
        uav_budget_active: scenario.has_uav_budget(),
        forced_zeros: acc.len(),
        residuals: constraint_residuals(&rates, scenario, csi, &acc),
        per_iteration: records,
    };
    Ok((schedule, rates, stats))
}
