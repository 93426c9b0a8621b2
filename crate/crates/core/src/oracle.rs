//! Independent reference computations used by tests and `validate`.
//!
//! None of these share code with the production path: the fixed point is
//! iterated rather than solved in closed form, the exact ergodic rate uses
//! the exponential integral, and the inner maximum is found by a derivative
//! free search.

use std::f64::consts::{LN_2, LOG2_E};

use crate::channel::CsiTensor;
use crate::ratelink::LinkState;
use crate::scenario::Scenario;

/// Root of `W = 1 + gamma W / (W + gamma)` by Newton iteration on the
/// fixed-point residual, starting from `W = 1 + gamma` and capped at
/// `max_steps`. Plain substitution contracts too slowly at high SNR to
/// resolve 1e-10 within a few hundred steps.
pub fn fixed_point_w(gamma: f64, max_steps: usize) -> f64 {
    if gamma <= 0.0 {
        return 1.0;
    }
    let residual = |w: f64| w - 1.0 - gamma * w / (w + gamma);
    let mut w = 1.0 + gamma;
    let mut f = residual(w);
    for _ in 0..max_steps {
        if f <= 0.0 {
            break;
        }
        let q = gamma / (w + gamma);
        let next = w - f / (1.0 - q * q);
        let fn_ = residual(next);
        if !(fn_.abs() < f.abs()) {
            break;
        }
        w = next;
        f = fn_;
    }
    w
}

/// Plain substitution of the fixed-point map, for comparison.
pub fn fixed_point_w_substitution(gamma: f64, steps: usize) -> f64 {
    let mut w = 1.0;
    for _ in 0..steps {
        w = 1.0 + gamma * w / (w + gamma);
    }
    w
}

/// `e^x E1(x)` for `x > 0`.
pub fn scaled_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0");
    const EULER: f64 = 0.577_215_664_901_532_9;
    if x <= 1.0 {
        // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        x.exp() * (-EULER - x.ln() - sum)
    } else {
        // Modified Lentz on the continued fraction 1/(x+1-1/(x+3-4/(x+5-...))).
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}

/// Ergodic rate `E[B log2(1 + gamma |h|^2)]` with `|h|^2 ~ Exp(1)`:
/// `B e^(1/gamma) E1(1/gamma) / ln 2`.
pub fn exact_ergodic_rate(gamma: f64, bandwidth: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    bandwidth * scaled_e1(1.0 / gamma) / LN_2
}

/// Per-link saddle term `sigma2 dt / beta (2^(r/B + log2 e (1 - 1/z)) - z)`.
pub fn saddle_value(r: f64, z: f64, link: &LinkState) -> f64 {
    link.energy_scale() * ((r / link.bandwidth + LOG2_E * (1.0 - 1.0 / z)).exp2() - z)
}

/// Maximizes the per-link saddle term over `z >= 1` by golden-section search
/// on a bracket grown geometrically until the value turns down.
pub fn golden_max_z(r: f64, link: &LinkState) -> (f64, f64) {
    let f = |z: f64| saddle_value(r, z, link);
    let mut hi = 2.0;
    while f(hi) > f(hi / 2.0).max(f(1.0)) && hi < 1e300 {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..300 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    let z = 0.5 * (lo + hi);
    [(1.0, f(1.0)), (z, f(z))]
        .into_iter()
        .fold((1.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

/// Link energy `max_z f` by golden-section search, in joules.
pub fn golden_energy(r: f64, link: &LinkState) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    golden_max_z(r, link).1
}

/// Minimum relaxed energy of a BS / relay / sink instance (no UAVs, one relay,
/// one sink, two slots) by grid search.
///
/// The three free time shares `y(0->1, t1)`, `y(0->2, t1)` and `y(0->2, t2)`
/// run over `{0, 1/steps, ..., 1}`. For each grid point the relay hop
/// `y(1->2, t2)` and the second BS-to-relay share `y(0->1, t2)` are set to the
/// smallest values meeting the sink and relay targets, which is optimal
/// because energy is increasing in rate and raising either only tightens the
/// remaining constraints. Returns `None` when no grid point is feasible.
pub fn tiny_grid_energy(scenario: &Scenario, csi: &CsiTensor, steps: usize) -> Option<f64> {
    let c = scenario.counts;
    assert!(
        c.uavs == 0 && c.vessels == 2 && c.relay_vessels == 1 && c.slots == 2,
        "grid oracle covers the two-slot relay instance only"
    );
    let radio = &scenario.radio;
    let dt = radio.slot_seconds;
    let n = scenario.subcarriers() as f64;
    let link = |tx: usize, rx: usize, t: usize| {
        let state = LinkState {
            beta: csi.beta(tx, rx, t),
            sigma2: radio.noise_power_w,
            bandwidth: radio.subcarrier_bandwidth_hz,
            dt,
        };
        (csi.peak_rate(tx, rx, t), state)
    };
    let (r01a, l01a) = link(0, 1, 0);
    let (r02a, l02a) = link(0, 2, 0);
    let (r01b, l01b) = link(0, 1, 1);
    let (r02b, l02b) = link(0, 2, 1);
    let (r12b, l12b) = link(1, 2, 1);
    let q1 = scenario.qos_of(1);
    let q2 = scenario.qos_of(2);
    let table = |r: f64, l: &LinkState| -> Vec<f64> {
        (0..=steps).map(|k| golden_energy(r * k as f64 / steps as f64, l)).collect()
    };
    let e01a = table(r01a, &l01a);
    let e02a = table(r02a, &l02a);
    let e02b = table(r02b, &l02b);
    let slack = 1e-12;

    let mut best: Option<f64> = None;
    for a in 0..=steps {
        let y01a = a as f64 / steps as f64;
        let held1 = r01a * y01a * dt;
        if q1.deadline_slot == 1 && held1 < q1.volume_bits * (1.0 - slack) {
            continue;
        }
        for b in 0..=steps {
            let y02a = b as f64 / steps as f64;
            if y01a + y02a > n + slack {
                break;
            }
            for c2 in 0..=steps {
                let y02b = c2 as f64 / steps as f64;
                let direct = (r02a * y02a + r02b * y02b) * dt;
                let missing = (q2.volume_bits - direct).max(0.0);
                if q2.deadline_slot == 1 && r02a * y02a * dt < q2.volume_bits * (1.0 - slack) {
                    continue;
                }
                let y12b = if missing > 0.0 { missing / (r12b * dt) } else { 0.0 };
                if y12b > 1.0 + slack || y12b * r12b * dt > held1 * (1.0 + slack) + 1e-9 {
                    continue;
                }
                let need1 = (q1.volume_bits - held1 + y12b * r12b * dt).max(0.0);
                let y01b = if need1 > 0.0 { need1 / (r01b * dt) } else { 0.0 };
                if y01b > 1.0 + slack
                    || y01b + y02b + y12b > n + slack
                    || y01b + y12b > 1.0 + slack
                    || y02b + y12b > 1.0 + slack
                {
                    continue;
                }
                let e = e01a[a]
                    + e02a[b]
                    + e02b[c2]
                    + golden_energy(r12b * y12b.min(1.0), &l12b)
                    + golden_energy(r01b * y01b.min(1.0), &l01b);
                if best.is_none_or(|v| e < v) {
                    best = Some(e);
                }
            }
        }
    }
    best
}

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratelink::{effective_w_from_gamma, rate_from_gamma};
    use approx::assert_relative_eq;

    #[test]
    fn fixed_point_recovers_quadratic_roots() {
        assert_relative_eq!(fixed_point_w(2.0, 200), 2.0, max_relative = 1e-12);
        assert_relative_eq!(fixed_point_w(6.0, 200), 3.0, max_relative = 1e-12);
        assert_eq!(fixed_point_w(0.0, 200), 1.0);
        assert_relative_eq!(fixed_point_w_substitution(2.0, 200), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn fixed_point_high_snr() {
        for gamma in [1e3, 1e6, 1e8] {
            let w = fixed_point_w(gamma, 200);
            assert_relative_eq!(w, effective_w_from_gamma(gamma), max_relative = 1e-10);
        }
    }

    #[test]
    fn e1_reference_values() {
        // E1(1) = 0.21938393439552, E1(0.5) = 0.55977359477616, E1(2) = 0.04890051070806
        assert_relative_eq!(scaled_e1(1.0) * (-1f64).exp(), 0.219_383_934_395_520_3, max_relative = 1e-13);
        assert_relative_eq!(scaled_e1(0.5) * (-0.5f64).exp(), 0.559_773_594_776_160_8, max_relative = 1e-13);
        assert_relative_eq!(scaled_e1(2.0) * (-2f64).exp(), 0.048_900_510_708_061_12, max_relative = 1e-13);
        // large x: e^x E1(x) ~ 1/x (1 - 1/x + 2/x^2)
        let x = 1e4;
        assert_relative_eq!(scaled_e1(x), (1.0 - 1.0 / x + 2.0 / (x * x)) / x, max_relative = 1e-11);
    }

    #[test]
    fn exact_rate_at_gamma_two() {
        let exact = exact_ergodic_rate(2.0, 1.0);
        assert!((exact - 1.331479).abs() < 1e-6, "{exact}");
        assert!(rate_from_gamma(2.0, 1.0) < exact);
    }

    #[test]
    fn golden_search_finds_w() {
        let link = LinkState::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let r = rate_from_gamma(2.0, 1.0);
        let (z, v) = golden_max_z(r, &link);
        assert!((z - 2.0).abs() < 1e-6, "{z}");
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
    }
}
