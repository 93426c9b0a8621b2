//! The relaxed convex problem: minimum total energy over continuous rates
//! under half-duplex, subcarrier, QoS, causality, box and optional UAV budget
//! constraints, with a forced-zero set removed by variable deletion.
//!
//! The inner maximization of the saddle form is eliminated analytically (the
//! maximizer is the effective-SNR variable), leaving a separable convex
//! objective over a polytope. Variables are normalized to `y = r / R` and
//! solved with a primal-dual interior point method. Infeasible QoS targets
//! are detected with elastic slacks on the QoS rows.

mod ipm;
mod problem;

use serde::{Deserialize, Serialize};

use crate::channel::CsiTensor;
use crate::links::{ForcedZeroSet, RateAllocation, Schedule};
use crate::scenario::Scenario;
use crate::Result;

use problem::{Assembly, Relaxed, RowKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Converged,
    IterationLimit,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Scaled primal residual target.
    pub primal_tol: f64,
    /// Scaled stationarity target.
    pub dual_tol: f64,
    /// Average complementarity target; small values keep unused links far
    /// below the detachment threshold.
    pub complementarity_tol: f64,
    pub max_iterations: usize,
    /// Initial penalty on QoS shortfall (normalized units).
    pub elastic_penalty: f64,
    /// Shortfall above this fraction of a QoS row's scale means infeasible.
    pub infeasibility_tol: f64,
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            complementarity_tol: 1e-13,
            max_iterations: 300,
            elastic_penalty: 1e4,
            infeasibility_tol: 1e-7,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    /// Total energy in joules.
    pub objective: f64,
    pub iterations: usize,
    pub max_primal_residual: f64,
    pub stationarity_residual: f64,
    pub status: SolverStatus,
    /// The first unsatisfiable QoS constraint when infeasible.
    pub certificate: Option<String>,
    pub variables: usize,
    pub constraints: usize,
    /// `(iteration, normalized objective, max scaled residual)` when tracing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<(usize, f64, f64)>,
}

impl SolverReport {
    pub fn is_feasible(&self) -> bool {
        self.status != SolverStatus::Infeasible
    }

    /// Energy, or infinity when infeasible.
    pub fn energy(&self) -> f64 {
        if self.is_feasible() {
            self.objective
        } else {
            f64::INFINITY
        }
    }

    /// Writes the iteration trace as `iter,objective,max_residual`.
    pub fn write_trace_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "objective", "max_residual"])?;
        for (i, obj, res) in &self.trace {
            w.write_record([i.to_string(), obj.to_string(), res.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Time shares at or below this are interior-point remnants of a variable
/// resting on its lower bound and are returned as exact zeros.
const SNAP_TO_ZERO: f64 = 1e-8;

fn infeasible(certificate: String) -> SolverReport {
    SolverReport {
        objective: f64::INFINITY,
        iterations: 0,
        max_primal_residual: f64::INFINITY,
        stationarity_residual: f64::INFINITY,
        status: SolverStatus::Infeasible,
        certificate: Some(certificate),
        variables: 0,
        constraints: 0,
        trace: Vec::new(),
    }
}

/// Minimum-energy rates with every link of `zeros` pinned to zero.
pub fn solve_relaxed(
    scenario: &Scenario,
    csi: &CsiTensor,
    zeros: &ForcedZeroSet,
    opts: &SolverOptions,
) -> Result<(RateAllocation, SolverReport)> {
    zeros.validate(&scenario.grid())?;
    let grid = scenario.grid();
    let model = match Relaxed::assemble(scenario, csi, zeros) {
        Assembly::Model(m) => m,
        Assembly::Infeasible(cert) => return Ok((RateAllocation::zeros(grid), infeasible(cert))),
    };
    let (problem, elastic_rows) = model.to_ipm();
    let n = model.n();
    let ipm_opts = ipm::IpmOptions {
        max_iter: opts.max_iterations,
        primal_tol: opts.primal_tol,
        dual_tol: opts.dual_tol,
        mu_tol: opts.complementarity_tol,
    };

    let mut penalty = opts.elastic_penalty;
    let mut attempt = 0;
    let result = loop {
        let res = ipm::solve(
            &problem,
            |k, x| if k < n { model.phi(k, x) } else { (penalty * x, penalty, 0.0) },
            &ipm_opts,
        );
        let short = elastic_rows
            .iter()
            .enumerate()
            .map(|(e, &row)| (row, res.x[n + e] / (1.0 + model.rows[row].rhs.abs())))
            .fold(None, |best: Option<(usize, f64)>, (row, s)| match best {
                Some((_, b)) if b >= s => best,
                _ => Some((row, s)),
            });
        match short {
            Some((row, s)) if s > opts.infeasibility_tol => {
                if attempt == 0 {
                    attempt += 1;
                    penalty *= 1e3;
                    continue;
                }
                let RowKind::Qos { vessel, slot } = model.rows[row].kind else {
                    unreachable!("elastic slacks sit on QoS rows only")
                };
                let mut report = infeasible(format!(
                    "QoS of vessel {vessel} at slot {} cannot be met",
                    slot + 1
                ));
                report.iterations = res.iterations;
                report.variables = n;
                report.constraints = model.rows.len();
                return Ok((RateAllocation::zeros(grid), report));
            }
            _ => break res,
        }
    };

    let mut rates = RateAllocation::zeros(grid);
    let mut objective = 0.0;
    {
        let out = rates.as_mut_slice();
        for v in 0..n {
            let y = result.x[v].clamp(0.0, 1.0);
            let r = if y <= SNAP_TO_ZERO { 0.0 } else { model.peak[v] * y };
            out[model.links[v]] = r;
            objective += model.energy[v].eval(r).0;
        }
    }
    let status = match result.status {
        ipm::IpmStatus::Converged => SolverStatus::Converged,
        _ => SolverStatus::IterationLimit,
    };
    let report = SolverReport {
        objective,
        iterations: result.iterations,
        max_primal_residual: result.primal_residual,
        stationarity_residual: result.dual_residual,
        status,
        certificate: None,
        variables: n,
        constraints: model.rows.len(),
        trace: if opts.trace { result.trace } else { Vec::new() },
    };
    Ok((rates, report))
}

/// Largest violation of each constraint family, in natural units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max(S^r - 1, 0)`, dimensionless.
    pub half_duplex: f64,
    /// `max(sum r/R - N, 0)`, dimensionless.
    pub subcarrier: f64,
    /// Largest QoS shortfall in bits.
    pub qos: f64,
    /// Largest forwarding excess over held data, in bits.
    pub causality: f64,
    /// Largest box violation in bits/s.
    pub bounds: f64,
    /// Largest rate on a forced-zero link, in bits/s.
    pub forced_zero: f64,
    /// `max(sum r/R - E/(P dt), 0)` over budgeted UAVs.
    pub uav_budget: f64,
}

impl ResidualReport {
    /// Largest residual after scaling the bit-valued families by `volume_scale`
    /// and the rate-valued ones by `rate_scale`.
    pub fn max_scaled(&self, volume_scale: f64, rate_scale: f64) -> f64 {
        [
            self.half_duplex,
            self.subcarrier,
            self.uav_budget,
            self.qos / volume_scale,
            self.causality / volume_scale,
            self.bounds / rate_scale,
            self.forced_zero / rate_scale,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn ratio(r: f64, peak: f64) -> f64 {
    if peak > 0.0 {
        r / peak
    } else if r > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Held data `V~_{j,t}` of every receiver after every slot, in bits.
pub fn held_volumes(rates: &RateAllocation, scenario: &Scenario) -> Vec<Vec<f64>> {
    let grid = scenario.grid();
    let dt = scenario.radio.slot_seconds;
    (0..=grid.receivers())
        .map(|node| {
            let mut acc = 0.0;
            (0..grid.slots)
                .map(|t| {
                    if node > 0 {
                        for l in grid.incident(node, t) {
                            let r = rates.get(l);
                            acc += if l.rx == node { r * dt } else { -r * dt };
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn constraint_residuals(
    rates: &RateAllocation,
    scenario: &Scenario,
    csi: &CsiTensor,
    zeros: &ForcedZeroSet,
) -> ResidualReport {
    let grid = scenario.grid();
    let dt = scenario.radio.slot_seconds;
    let mut rep = ResidualReport::default();
    let y = |l| ratio(rates.get(l), csi.peak_rate(l.tx, l.rx, l.slot));

    for l in grid.links() {
        let r = rates.get(l);
        let peak = csi.peak_rate(l.tx, l.rx, l.slot);
        rep.bounds = rep.bounds.max(-r).max(r - peak);
        if zeros.contains(&l) {
            rep.forced_zero = rep.forced_zero.max(r.abs());
        }
    }
    for t in 0..grid.slots {
        for node in 1..=grid.receivers() {
            let s: f64 = grid.incident(node, t).map(y).sum();
            rep.half_duplex = rep.half_duplex.max(s - 1.0);
        }
        let total: f64 = grid.links_in_slot(t).map(y).sum();
        rep.subcarrier = rep.subcarrier.max(total - scenario.subcarriers() as f64);
    }
    let held = held_volumes(rates, scenario);
    for vessel in grid.vessel_ids() {
        let q = scenario.qos_of(vessel);
        for t in q.deadline_slot - 1..grid.slots {
            rep.qos = rep.qos.max(q.volume_bits - held[vessel][t]);
        }
    }
    for node in grid.forwarders() {
        for t in 0..grid.slots {
            let before = if t == 0 { 0.0 } else { held[node][t - 1] };
            let out: f64 = (1..=grid.receivers())
                .filter(|&rx| rx != node)
                .map(|rx| rates.get(crate::links::LinkSlot::new(node, rx, t)) * dt)
                .sum();
            rep.causality = rep.causality.max(out - before);
        }
    }
    for uav in 1..=grid.uavs {
        if let Some(cap) = scenario.uav_link_cap(uav) {
            let used: f64 = (0..grid.slots)
                .flat_map(|t| (1..=grid.receivers()).filter(move |&rx| rx != uav).map(move |rx| (rx, t)))
                .map(|(rx, t)| y(crate::links::LinkSlot::new(uav, rx, t)))
                .sum();
            rep.uav_budget = rep.uav_budget.max(used - cap);
        }
    }
    for v in [
        &mut rep.half_duplex,
        &mut rep.subcarrier,
        &mut rep.qos,
        &mut rep.causality,
        &mut rep.bounds,
        &mut rep.uav_budget,
    ] {
        *v = v.max(0.0);
    }
    rep
}

/// Integral-constraint violations of a binary schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleViolations {
    /// Node-slots with `S^delta >= 2`.
    pub half_duplex: usize,
    /// Total excess links over `N`, summed over slots.
    pub subcarrier: usize,
    /// UAVs whose active transmissions exceed `E / P`.
    pub uav_budget: usize,
}

impl ScheduleViolations {
    pub fn is_clean(&self) -> bool {
        *self == ScheduleViolations::default()
    }
}

/// Whether UAV `uav` keeps its integral link count within `E / P`.
/// The integral cap uses the same `E / (P dt)` normalization as the relaxed
/// surrogate so that both constraints agree after detachment.
pub fn uav_budget_ok(schedule: &Schedule, scenario: &Scenario, uav: usize) -> bool {
    match scenario.uav_link_cap(uav) {
        None => true,
        Some(cap) => {
            let used = schedule.active_links().filter(|l| l.tx == uav).count();
            used as f64 <= cap + 1e-9
        }
    }
}

pub fn schedule_violations(schedule: &Schedule, scenario: &Scenario) -> ScheduleViolations {
    let grid = scenario.grid();
    let mut v = ScheduleViolations::default();
    for t in 0..grid.slots {
        for node in 1..=grid.receivers() {
            if schedule.node_load(node, t) >= 2 {
                v.half_duplex += 1;
            }
        }
        v.subcarrier += schedule.active_in_slot(t).saturating_sub(scenario.subcarriers());
    }
    v.uav_budget = (1..=grid.uavs).filter(|&u| !uav_budget_ok(schedule, scenario, u)).count();
    v
}

#[cfg(test)]
mod tests;
