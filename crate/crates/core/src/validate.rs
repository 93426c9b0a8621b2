//! Randomized invariant suites behind `seasched validate`.
//!
//! Each property draws its cases from a per-case seed so that a failure can
//! be replayed from the seed alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{exhaustive_optimal, relaxed_lower_bound, ExhaustiveLimits};
use crate::channel::predict_csi;
use crate::links::RateAllocation;
use crate::oracle::{central_difference, exact_ergodic_rate, fixed_point_w, golden_energy, saddle_value};
use crate::par::{self, Parallelism};
use crate::ratelink::{effective_w_from_gamma, rate_from_gamma, total_energy, total_energy_gradient, LinkEnergy, LinkState};
use crate::scenario::{generate_random_topology, qos_targets_from_alpha, TopologyParams};
use crate::scheduler::{run_scheduler, SchedulerConfig};
use crate::solver::{constraint_residuals, schedule_violations};
use crate::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Reduced case counts.
    pub quick: bool,
    pub parallelism: Parallelism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Seed that reproduces the failing case.
    pub case_seed: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub cases: usize,
    /// Largest observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
    pub counterexample: Option<Counterexample>,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Result of one case: the checked quantity and, if it breaks the property,
/// a description.
type Case = Result<(f64, Option<String>)>;

struct Property {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    quick_cases: usize,
    check: fn(&mut ChaCha8Rng, f64) -> Case,
}

const PROPERTIES: &[Property] = &[
    Property {
        name: "fixed_point_closed_form",
        tolerance: 1e-10,
        cases: 10_000,
        quick_cases: 1000,
        check: fixed_point_case,
    },
    Property {
        name: "rate_approximation_envelope",
        tolerance: 0.075,
        cases: 2000,
        quick_cases: 200,
        check: rate_envelope_case,
    },
    Property {
        name: "inner_max_equals_energy",
        tolerance: 1e-7,
        cases: 100,
        quick_cases: 30,
        check: inner_max_case,
    },
    Property {
        name: "energy_convex_in_rate",
        tolerance: 1e-9,
        cases: 100,
        quick_cases: 30,
        check: convexity_case,
    },
    Property {
        name: "saddle_concave_in_z",
        tolerance: 0.0,
        cases: 100,
        quick_cases: 30,
        check: concavity_case,
    },
    Property {
        name: "energy_gradient",
        tolerance: 1e-5,
        cases: 100,
        quick_cases: 20,
        check: gradient_case,
    },
    Property {
        name: "scheduler_feasibility",
        tolerance: 1e-6,
        cases: 12,
        quick_cases: 3,
        check: scheduler_case,
    },
    Property {
        name: "exhaustive_ordering",
        tolerance: 1e-6,
        cases: 10,
        quick_cases: 3,
        check: exhaustive_case,
    },
];

/// Names of every property, in execution order.
pub fn property_names() -> Vec<&'static str> {
    PROPERTIES.iter().map(|p| p.name).collect()
}

fn case_seed(seed: u64, property: usize, case: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((property as u64) << 32)
        .wrapping_add(case as u64)
}

/// Replays a single case of `name` from its seed.
pub fn replay(name: &str, case_seed: u64) -> Option<Case> {
    let p = PROPERTIES.iter().find(|p| p.name == name)?;
    Some((p.check)(&mut ChaCha8Rng::seed_from_u64(case_seed), p.tolerance))
}

/// Runs every property and returns one outcome per property.
pub fn run_validation(opts: &ValidateOptions) -> Vec<PropertyOutcome> {
    PROPERTIES
        .iter()
        .enumerate()
        .map(|(k, p)| run_property(k, p, opts))
        .collect()
}

fn run_property(index: usize, p: &Property, opts: &ValidateOptions) -> PropertyOutcome {
    let cases = if opts.quick { p.quick_cases } else { p.cases };
    let results = par::map_range(opts.parallelism, cases, |c| {
        let seed = case_seed(opts.seed, index, c);
        (seed, (p.check)(&mut ChaCha8Rng::seed_from_u64(seed), p.tolerance))
    });
    let mut worst: f64 = 0.0;
    let mut counterexample = None;
    for (seed, r) in results {
        let failure = match r {
            Ok((value, failure)) => {
                worst = worst.max(value);
                failure
            }
            Err(e) => Some(format!("error: {e}")),
        };
        if let (None, Some(detail)) = (&counterexample, failure) {
            counterexample = Some(Counterexample { case_seed: seed, detail });
        }
    }
    PropertyOutcome {
        name: p.name.to_string(),
        cases,
        worst,
        tolerance: p.tolerance,
        counterexample,
    }
}

fn verdict(value: f64, tol: f64, detail: impl FnOnce() -> String) -> Case {
    Ok((value, (value > tol || value.is_nan()).then(detail)))
}

/// Half the draws are uniform on `[0, 1e8]`, half log-uniform on `[1e-6, 1e8]`.
fn fixed_point_case(rng: &mut ChaCha8Rng, tol: f64) -> Case {
    let gamma = if rng.gen_bool(0.5) {
        rng.gen_range(0.0..=1e8)
    } else {
        10f64.powf(rng.gen_range(-6.0..8.0))
    };
    let closed = effective_w_from_gamma(gamma);
    let iterated = fixed_point_w(gamma, 200);
    let rel = (closed - iterated).abs() / iterated;
    verdict(rel, tol, || format!("gamma = {gamma:e}: closed form {closed:e}, iterated {iterated:e}"))
}

fn rate_envelope_case(rng: &mut ChaCha8Rng, tol: f64) -> Case {
    let gamma = 10f64.powf(rng.gen_range(0.0..=6.0));
    let approx = rate_from_gamma(gamma, 1.0);
    let exact = exact_ergodic_rate(gamma, 1.0);
    let rel = (approx - exact).abs() / exact;
    verdict(rel, tol, || format!("gamma = {gamma:e}: approximation {approx:e}, exact {exact:e}"))
}

/// Random link constants spanning the evaluated scenarios and beyond, with
/// a rate between 0 and 12 bits/s/Hz.
fn random_link(rng: &mut ChaCha8Rng) -> (LinkState, f64) {
    let beta = 10f64.powf(rng.gen_range(-16.0..-7.0));
    let sigma2 = 10f64.powf(rng.gen_range(-15.0..-12.0));
    let bandwidth = 10f64.powf(rng.gen_range(5.0..7.0));
    let link = LinkState::new(beta, sigma2, bandwidth, 30.0).expect("positive constants");
    let r = rng.gen_range(0.01..12.0) * bandwidth;
    (link, r)
}

fn inner_max_case(rng: &mut ChaCha8Rng, tol: f64) -> Case {
    let (link, r) = random_link(rng);
    let energy = LinkEnergy::new(&link).eval(r).0;
    let searched = golden_energy(r, &link);
    let rel = (energy - searched).abs() / searched;
    verdict(rel, tol, || format!("r = {r:e}: energy {energy:e}, max_z {searched:e}"))
}

fn convexity_case(rng: &mut ChaCha8Rng, tol: f64) -> Case {
    let (link, r1) = random_link(rng);
    let r2 = rng.gen_range(0.01..12.0) * link.bandwidth;
    let lambda: f64 = rng.gen_range(0.0..=1.0);
    let e = |r: f64| LinkEnergy::new(&link).eval(r).0;
    let mid = e(lambda * r1 + (1.0 - lambda) * r2);
    let chord = lambda * e(r1) + (1.0 - lambda) * e(r2);
    let excess = (mid - chord) / chord.max(f64::MIN_POSITIVE);
    verdict(excess, tol, || format!("r1 = {r1:e}, r2 = {r2:e}, lambda = {lambda}: {mid:e} above chord {chord:e}"))
}

/// Second central difference in `z`, relative to the function scale; any
/// positive value beyond rounding is a failure.
fn concavity_case(rng: &mut ChaCha8Rng, _tol: f64) -> Case {
    let (link, r) = random_link(rng);
    let z = 1.0 + 10f64.powf(rng.gen_range(-3.0..4.0));
    let h = 1e-3 * z.min(1.0).max(z * 1e-3);
    let f = |z: f64| saddle_value(r, z, &link);
    let lo = (z - h).max(1.0);
    let second = (f(lo + 2.0 * h) - 2.0 * f(lo + h) + f(lo)) / (h * h);
    let scale = f(lo + h).abs().max(link.energy_scale()) / (h * h);
    let value = second / scale;
    verdict(value, 1e-9, || format!("r = {r:e}, z = {z}: second difference {second:e}"))
}

fn small_params(seed: u64) -> TopologyParams {
    TopologyParams {
        uavs: 1,
        vessels: 3,
        relay_vessels: 2,
        slots: 3,
        subcarriers: 2,
        early_deadline_vessels: 1,
        ..TopologyParams::standard(seed)
    }
}

/// Gradient of the total energy against central differences at a random
/// interior rate vector of a random small instance.
fn gradient_case(rng: &mut ChaCha8Rng, tol: f64) -> Case {
    let s = generate_random_topology(&small_params(rng.gen()))?;
    let csi = predict_csi(&s)?;
    let grid = s.grid();
    let mut rates = RateAllocation::zeros(grid);
    for l in grid.links() {
        rates.set(l, rng.gen_range(0.05..0.95) * csi.peak_rate(l.tx, l.rx, l.slot));
    }
    let grad = total_energy_gradient(&rates, &csi, &s)?;
    let links: Vec<_> = grid.links().filter(|l| csi.peak_rate(l.tx, l.rx, l.slot) > 1e3).collect();
    let l = links[rng.gen_range(0..links.len())];
    let k = grid.index(l).expect("valid link");
    let r0 = rates.get(l);
    let h = 1e-4 * r0;
    let numeric = central_difference(
        |r| {
            let mut v = rates.clone();
            v.set(l, r);
            total_energy(&v, &csi, &s).unwrap_or(f64::NAN)
        },
        r0,
        h,
    );
    let rel = (grad[k] - numeric).abs() / numeric.abs().max(f64::MIN_POSITIVE);
    verdict(rel, tol, || format!("link {l}: analytic {:e}, numeric {numeric:e}", grad[k]))
}

fn scheduler_case(rng: &mut ChaCha8Rng, tol: f64) -> Case {
    let params = TopologyParams {
        vessels: 4,
        relay_vessels: 3,
        slots: 4,
        subcarriers: 3,
        ..small_params(rng.gen())
    };
    let alpha = rng.gen_range(0.2..0.45);
    let mut s = generate_random_topology(&params)?;
    let csi = predict_csi(&s)?;
    s.set_qos_volumes(&qos_targets_from_alpha(&s, &csi, alpha)?)?;
    let (schedule, rates, stats) = run_scheduler(&s, &csi, &SchedulerConfig::default())?;
    let vmax = s.qos.iter().map(|q| q.volume_bits).fold(1.0, f64::max);
    let rmax = csi.peak_rates().iter().copied().fold(0.0, f64::max);
    let residual = constraint_residuals(&rates, &s, &csi, &Default::default()).max_scaled(vmax, rmax);
    let violations = schedule_violations(&schedule, &s);
    let detail = || {
        format!(
            "seed {} alpha {alpha}: residual {residual:e}, violations {violations:?}, s1 + s2 = {} of {}, subproblems {} of {}",
            params.seed,
            stats.s1 + stats.s2,
            stats.iteration_bound,
            stats.subproblems,
            stats.subproblem_bound
        )
    };
    if !violations.is_clean()
        || stats.s1 + stats.s2 > stats.iteration_bound
        || stats.subproblems as u128 > stats.subproblem_bound
    {
        return Ok((residual, Some(detail())));
    }
    verdict(residual, tol, detail)
}

fn exhaustive_case(rng: &mut ChaCha8Rng, tol: f64) -> Case {
    let params = TopologyParams::tiny(rng.gen());
    let alpha = rng.gen_range(0.1..0.5);
    let mut s = generate_random_topology(&params)?;
    let csi = predict_csi(&s)?;
    s.set_qos_volumes(&qos_targets_from_alpha(&s, &csi, alpha)?)?;
    let config = SchedulerConfig::default();
    let bound = relaxed_lower_bound(&s, &csi, &config.solver)?.energy_j;
    let exh = exhaustive_optimal(&s, &csi, &ExhaustiveLimits::default(), &config)?.energy_j;
    let proposed = run_scheduler(&s, &csi, &config)?.2.energy_j;
    let gap = ((bound - exh) / exh).max((exh - proposed) / proposed).max(0.0);
    verdict(gap, tol, || {
        format!(
            "seed {} alpha {alpha}: bound {bound:e}, exhaustive {exh:e}, proposed {proposed:e}",
            params.seed
        )
    })
}
