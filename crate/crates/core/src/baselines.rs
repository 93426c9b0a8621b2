//! Reference schemes and bounds: fixed transmission, rate adaptation over
//! direct links only, the relaxed lower bound, exhaustive search on tiny
//! instances and the largest uniform QoS volume the scheduler can serve.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::CsiTensor;
use crate::links::{ForcedZeroSet, LinkSlot, RateAllocation, Schedule};
use crate::par;
use crate::scenario::Scenario;
use crate::scheduler::{detach_schedule, run_scheduler, run_scheduler_with_zeros, SchedulerConfig, SchedulerStats};
use crate::solver::{schedule_violations, solve_relaxed, SolverOptions};
use crate::{Error, Result};

/// Evaluated scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Iterative joint scheduling and rate adaptation.
    Proposed,
    /// Full-power direct transmission in the best slots.
    Fixed,
    /// Scheduler restricted to base-station links.
    RateOnly,
    /// Relaxed optimum without integrality.
    Bound,
    /// Best schedule by enumeration.
    Exhaustive,
    /// Scheduler with every UAV link removed.
    NoUav,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Proposed,
        Scheme::Fixed,
        Scheme::RateOnly,
        Scheme::Bound,
        Scheme::Exhaustive,
        Scheme::NoUav,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Fixed => "fixed",
            Scheme::RateOnly => "rateonly",
            Scheme::Bound => "bound",
            Scheme::Exhaustive => "exhaustive",
            Scheme::NoUav => "nouav",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = Scheme::ALL.iter().map(|k| k.name()).collect();
                Error::Domain(format!("unknown scheme `{s}` (expected one of {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub scheme: Scheme,
    /// Joules; infinite when infeasible.
    pub energy_j: f64,
    /// Binary schedule, for schemes that produce one.
    pub schedule: Option<Schedule>,
    pub rates: Option<RateAllocation>,
    pub feasible: bool,
    pub notes: Vec<String>,
    /// Present for scheduler-based schemes.
    pub stats: Option<SchedulerStats>,
}

impl BaselineResult {
    fn infeasible(scheme: Scheme, note: String) -> Self {
        BaselineResult {
            scheme,
            energy_j: f64::INFINITY,
            schedule: None,
            rates: None,
            feasible: false,
            notes: vec![note],
            stats: None,
        }
    }
}

/// Runs `scheme` with default limits.
pub fn run_scheme(scheme: Scheme, scenario: &Scenario, csi: &CsiTensor, config: &SchedulerConfig) -> Result<BaselineResult> {
    match scheme {
        Scheme::Proposed => scheduler_result(scheme, run_scheduler(scenario, csi, config)),
        Scheme::Fixed => Ok(fixed_transmission(scenario, csi)),
        Scheme::RateOnly => rate_adaptation_only(scenario, csi, config),
        Scheme::Bound => relaxed_lower_bound(scenario, csi, &config.solver),
        Scheme::Exhaustive => exhaustive_optimal(scenario, csi, &ExhaustiveLimits::default(), config),
        Scheme::NoUav => without_uavs(scenario, csi, config),
    }
}

fn scheduler_result(
    scheme: Scheme,
    run: Result<(Schedule, RateAllocation, SchedulerStats)>,
) -> Result<BaselineResult> {
    match run {
        Ok((schedule, rates, stats)) => Ok(BaselineResult {
            scheme,
            energy_j: stats.energy_j,
            schedule: Some(schedule),
            rates: Some(rates),
            feasible: true,
            notes: Vec::new(),
            stats: Some(stats),
        }),
        Err(e @ (Error::Infeasible(_) | Error::CandidatesExhausted { .. })) => {
            Ok(BaselineResult::infeasible(scheme, e.to_string()))
        }
        Err(e) => Err(e),
    }
}

/// Full-power direct transmission: each vessel takes its best direct slots
/// before its deadline until the volume is covered. Infeasible when a volume
/// is out of reach or a slot needs more than `N` subcarriers.
pub fn fixed_transmission(scenario: &Scenario, csi: &CsiTensor) -> BaselineResult {
    let grid = scenario.grid();
    let dt = scenario.radio.slot_seconds;
    let p0 = scenario.max_power(0);
    let mut schedule = Schedule::empty(grid);
    let mut rates = RateAllocation::zeros(grid);
    let mut notes = Vec::new();
    let mut feasible = true;
    for j in grid.vessel_ids() {
        let q = scenario.qos_of(j);
        if q.volume_bits <= 0.0 {
            continue;
        }
        let mut eligible: Vec<usize> = (0..q.deadline_slot).collect();
        // Stable sort keeps the earlier slot first among equal rates.
        eligible.sort_by(|&a, &b| csi.peak_rate(0, j, b).total_cmp(&csi.peak_rate(0, j, a)));
        let mut delivered = 0.0;
        for t in eligible {
            if delivered >= q.volume_bits {
                break;
            }
            let r = csi.peak_rate(0, j, t);
            if r <= 0.0 {
                break;
            }
            let l = LinkSlot::new(0, j, t);
            schedule.set(l, true);
            rates.set(l, r);
            delivered += r * dt;
        }
        if delivered < q.volume_bits {
            feasible = false;
            notes.push(format!(
                "vessel {j}: {delivered:.6e} of {:.6e} bits reachable before slot {}",
                q.volume_bits, q.deadline_slot
            ));
        }
    }
    for t in 0..grid.slots {
        let used = schedule.active_in_slot(t);
        if used > scenario.subcarriers() {
            feasible = false;
            notes.push(format!("slot {}: {used} links over {} subcarriers", t + 1, scenario.subcarriers()));
        }
    }
    let energy = schedule.count() as f64 * p0 * dt;
    BaselineResult {
        scheme: Scheme::Fixed,
        energy_j: if feasible { energy } else { f64::INFINITY },
        schedule: Some(schedule),
        rates: Some(rates),
        feasible,
        notes,
        stats: None,
    }
}

/// Every link whose transmitter is not the base station.
pub fn relay_links(scenario: &Scenario) -> ForcedZeroSet {
    scenario.grid().links().filter(|l| l.tx != 0).collect()
}

/// Every link with a UAV at either end.
pub fn uav_links(scenario: &Scenario) -> ForcedZeroSet {
    let grid = scenario.grid();
    let is_uav = |n: usize| (1..=grid.uavs).contains(&n);
    grid.links().filter(|l| is_uav(l.tx) || is_uav(l.rx)).collect()
}

/// Scheduler over direct base-station links only.
pub fn rate_adaptation_only(scenario: &Scenario, csi: &CsiTensor, config: &SchedulerConfig) -> Result<BaselineResult> {
    let zeros = relay_links(scenario);
    scheduler_result(Scheme::RateOnly, run_scheduler_with_zeros(scenario, csi, &zeros, config))
}

/// Scheduler with the UAVs silent.
pub fn without_uavs(scenario: &Scenario, csi: &CsiTensor, config: &SchedulerConfig) -> Result<BaselineResult> {
    let zeros = uav_links(scenario);
    scheduler_result(Scheme::NoUav, run_scheduler_with_zeros(scenario, csi, &zeros, config))
}

/// Relaxed optimum with nothing forced to zero; no integral schedule can use
/// less energy.
pub fn relaxed_lower_bound(scenario: &Scenario, csi: &CsiTensor, opts: &SolverOptions) -> Result<BaselineResult> {
    let (rates, report) = solve_relaxed(scenario, csi, &ForcedZeroSet::new(), opts)?;
    if !report.is_feasible() {
        return Ok(BaselineResult::infeasible(
            Scheme::Bound,
            report.certificate.unwrap_or_else(|| "relaxed problem infeasible".into()),
        ));
    }
    Ok(BaselineResult {
        scheme: Scheme::Bound,
        energy_j: report.objective,
        schedule: None,
        rates: Some(rates),
        feasible: true,
        notes: Vec::new(),
        stats: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustiveLimits {
    /// Largest number of schedules to solve.
    pub max_schedules: u128,
}

impl Default for ExhaustiveLimits {
    fn default() -> Self {
        ExhaustiveLimits { max_schedules: 1 << 20 }
    }
}

/// Link subsets of one slot that respect half-duplex and the subcarrier cap.
fn slot_patterns(scenario: &Scenario, slot: usize, limit: u128) -> Result<(Vec<LinkSlot>, Vec<u64>)> {
    let grid = scenario.grid();
    let links: Vec<LinkSlot> = grid.links_in_slot(slot).collect();
    let raw = 1u128.checked_shl(links.len() as u32).unwrap_or(u128::MAX);
    if links.len() >= 64 || raw > limit {
        return Err(Error::EnumerationTooLarge { count: raw, limit });
    }
    let n = scenario.subcarriers();
    let patterns = (0..1u64 << links.len())
        .filter(|&mask| {
            if mask.count_ones() as usize > n {
                return false;
            }
            let mut load = vec![0u8; grid.nodes()];
            for (k, l) in links.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    load[l.tx] += 1;
                    load[l.rx] += 1;
                }
            }
            load.iter().skip(1).all(|&c| c <= 1)
        })
        .collect();
    Ok((links, patterns))
}

/// Solves the rate problem of every integrally feasible schedule and keeps
/// the cheapest. Ties go to the first schedule in enumeration order.
pub fn exhaustive_optimal(
    scenario: &Scenario,
    csi: &CsiTensor,
    limits: &ExhaustiveLimits,
    config: &SchedulerConfig,
) -> Result<BaselineResult> {
    let grid = scenario.grid();
    let per_slot = (0..grid.slots)
        .map(|t| slot_patterns(scenario, t, limits.max_schedules))
        .collect::<Result<Vec<_>>>()?;
    let total = per_slot
        .iter()
        .try_fold(1u128, |acc, (_, p)| acc.checked_mul(p.len() as u128))
        .unwrap_or(u128::MAX);
    if total > limits.max_schedules {
        return Err(Error::EnumerationTooLarge {
            count: total,
            limit: limits.max_schedules,
        });
    }
    let decode = |mut k: usize| -> Schedule {
        let mut s = Schedule::empty(grid);
        for (links, patterns) in &per_slot {
            let mask = patterns[k % patterns.len()];
            k /= patterns.len();
            for (b, l) in links.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    s.set(*l, true);
                }
            }
        }
        s
    };
    let energies = par::map_range(config.parallelism, total as usize, |k| -> Result<f64> {
        let schedule = decode(k);
        if !schedule_violations(&schedule, scenario).is_clean() {
            return Ok(f64::INFINITY);
        }
        let zeros: ForcedZeroSet = grid.links().filter(|l| !schedule.is_active(*l)).collect();
        Ok(solve_relaxed(scenario, csi, &zeros, &config.solver)?.1.energy())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let best = crate::scheduler::argmin(&energies);
    if !energies[best].is_finite() {
        return Ok(BaselineResult::infeasible(
            Scheme::Exhaustive,
            format!("none of {total} schedules is feasible"),
        ));
    }
    let schedule = decode(best);
    let zeros: ForcedZeroSet = grid.links().filter(|l| !schedule.is_active(*l)).collect();
    let (rates, report) = solve_relaxed(scenario, csi, &zeros, &config.solver)?;
    let (schedule, rates) = detach_schedule(&rates, csi, config.eps_rel);
    Ok(BaselineResult {
        scheme: Scheme::Exhaustive,
        energy_j: report.objective,
        schedule: Some(schedule),
        rates: Some(rates),
        feasible: true,
        notes: vec![format!("{total} schedules enumerated")],
        stats: None,
    })
}

/// Outcome of the uniform-volume bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosSearch {
    /// Largest feasible per-vessel volume in bits; `None` when even the
    /// lower end of the bracket fails.
    pub volume_bits: Option<f64>,
    pub bracket: (f64, f64),
    /// The upper end was feasible, so the true maximum may be larger.
    pub saturated: bool,
    /// `min_j sum_t R[0][j][t] dt`, the direct-link reference volume.
    pub direct_reference_bits: f64,
    /// `(volume, feasible)` for every scheduler run, in order.
    pub probes: Vec<(f64, bool)>,
}

impl QosSearch {
    pub fn below_bracket(&self) -> bool {
        self.volume_bits.is_none()
    }
}

/// `min_j sum_t R[0][j][t] dt` over all vessels.
pub fn direct_reference_volume(scenario: &Scenario, csi: &CsiTensor) -> f64 {
    let dt = scenario.radio.slot_seconds;
    scenario
        .grid()
        .vessel_ids()
        .map(|j| (0..scenario.slots()).map(|t| csi.peak_rate(0, j, t)).sum::<f64>() * dt)
        .fold(f64::INFINITY, f64::min)
}

/// Largest uniform per-vessel volume, with every deadline at the horizon end,
/// that the scheduler can serve. Bisects `bracket` (default `[V_b, 10 V_b]`)
/// until its width is below `tol` times the initial width.
pub fn max_feasible_qos(
    scenario: &Scenario,
    csi: &CsiTensor,
    bracket: Option<(f64, f64)>,
    tol: f64,
    config: &SchedulerConfig,
) -> Result<QosSearch> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let v_b = direct_reference_volume(scenario, csi);
    let (lo, hi) = bracket.unwrap_or((v_b, 10.0 * v_b));
    let mut search = QosSearch {
        volume_bits: None,
        bracket: (lo, hi),
        saturated: false,
        direct_reference_bits: v_b,
        probes: Vec::new(),
    };
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Ok(search);
    }
    let mut probes = Vec::new();
    let mut uniform = scenario.clone();
    for q in &mut uniform.qos {
        q.deadline_slot = uniform.counts.slots;
    }
    let mut feasible = |v: f64| -> Result<bool> {
        uniform.set_qos_volumes(&vec![v; uniform.qos.len()])?;
        let ok = match run_scheduler(&uniform, csi, config) {
            Ok(_) => true,
            Err(Error::Infeasible(_) | Error::CandidatesExhausted { .. }) => false,
            Err(e) => return Err(e),
        };
        probes.push((v, ok));
        Ok(ok)
    };
    if feasible(lo)? {
        if feasible(hi)? {
            search.volume_bits = Some(hi);
            search.saturated = true;
        } else {
            let (mut a, mut b) = (lo, hi);
            while b - a > tol * (hi - lo) {
                let mid = 0.5 * (a + b);
                if feasible(mid)? {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            search.volume_bits = Some(a);
        }
    }
    search.probes = probes;
    Ok(search)
}
