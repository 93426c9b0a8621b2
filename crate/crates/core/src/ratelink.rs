//! Per-link rate/power math.
//!
//! With `gamma = beta * p / sigma2`, the effective-SNR variable
//! `W = (1 + sqrt(1 + 4 gamma)) / 2` gives the rate
//! `r = B [log2(1 + gamma/W) + log2 W - log2(e) (1 - 1/W)]`.
//! The inverse goes through the inner maximizer `z*` of the saddle term
//! `2^(r/B + log2(e)(1 - 1/z)) - z`, which satisfies `2 ln z + 1/z - 1 = r ln2 / B`
//! and equals `W`; the power is then `sigma2 z (z - 1) / beta`.

use std::f64::consts::{LN_2, LOG2_E};

use crate::channel::CsiTensor;
use crate::links::RateAllocation;
use crate::scenario::Scenario;
use crate::{Error, Result};

/// Constants of one link-slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub beta: f64,
    pub sigma2: f64,
    pub bandwidth: f64,
    pub dt: f64,
}

impl LinkState {
    pub fn new(beta: f64, sigma2: f64, bandwidth: f64, dt: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("sigma2", sigma2), ("bandwidth", bandwidth), ("dt", dt)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(LinkState {
            beta,
            sigma2,
            bandwidth,
            dt,
        })
    }

    pub fn gamma(&self, p: f64) -> f64 {
        self.beta * p / self.sigma2
    }

    /// `sigma2 * dt / beta`, the scale of every energy term on this link.
    pub fn energy_scale(&self) -> f64 {
        self.sigma2 * self.dt / self.beta
    }
}

/// A point of the saddle problem for one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePoint {
    pub r: f64,
    pub z: f64,
}

/// `W - 1` computed without cancellation.
fn w_minus_one(gamma: f64) -> f64 {
    2.0 * gamma / (1.0 + (1.0 + 4.0 * gamma).sqrt())
}

pub fn effective_w_from_gamma(gamma: f64) -> f64 {
    1.0 + w_minus_one(gamma)
}

/// Root `W >= 1` of `W = 1 + beta p / (sigma2 + beta p / W)`.
pub fn effective_w(beta: f64, p: f64, sigma2: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("power must be >= 0, got {p}")));
    }
    Ok(effective_w_from_gamma(beta * p / sigma2))
}

/// Approximate ergodic rate in bits/s for SNR `gamma` on bandwidth `bandwidth`.
pub fn rate_from_gamma(gamma: f64, bandwidth: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let w1 = w_minus_one(gamma);
    let w = 1.0 + w1;
    let nats = (gamma / w).ln_1p() + w1.ln_1p() - w1 / w;
    bandwidth * nats * LOG2_E
}

pub fn rate_from_power(p: f64, link: &LinkState) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("power must be >= 0, got {p}")));
    }
    Ok(rate_from_gamma(link.gamma(p), link.bandwidth))
}

/// `ln z*` for normalized rate `c = r ln2 / B`: the root of
/// `2u + e^(-u) - 1 = c`. Newton from the upper bracket end `c/2 + 1/2`
/// descends monotonically because the left side is convex and increasing.
fn inner_log_z(c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let mut u = 0.5 * c + 0.5;
    for _ in 0..100 {
        let g = 2.0 * u + (-u).exp_m1() - c;
        let dg = 2.0 - (-u).exp();
        let step = g / dg;
        let next = u - step;
        if !(next < u) || step <= 1e-16 * u {
            return next.min(u).max(0.0);
        }
        u = next;
    }
    u
}

/// Maximizer `z* >= 1` of the per-link saddle term at rate `r`.
pub fn inner_max_z(r: f64, link: &LinkState) -> f64 {
    inner_log_z(r * LN_2 / link.bandwidth).exp()
}

/// Transmit power needed for rate `r`.
pub fn power_from_rate(r: f64, link: &LinkState) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("rate must be >= 0, got {r}")));
    }
    let u = inner_log_z(r * LN_2 / link.bandwidth);
    Ok(link.sigma2 / link.beta * u.exp() * u.exp_m1())
}

/// One saddle term `2^(r/B + log2(e)(1 - 1/z)) - z`, unscaled.
fn saddle_term(r: f64, z: f64, bandwidth: f64) -> (f64, f64) {
    let e = (r / bandwidth + LOG2_E * (1.0 - 1.0 / z)).exp2();
    (e - z, e)
}

/// Value and gradients of the saddle function for one link.
pub fn link_saddle(point: SaddlePoint, link: &LinkState) -> (f64, f64, f64) {
    let k = link.energy_scale();
    let (term, e) = saddle_term(point.r, point.z, link.bandwidth);
    let grad_r = k * LN_2 / link.bandwidth * e;
    let grad_z = k * (e / (point.z * point.z) - 1.0);
    (k * term, grad_r, grad_z)
}

/// Second derivative of the saddle term in `z`.
pub fn link_saddle_zz(point: SaddlePoint, link: &LinkState) -> f64 {
    let (_, e) = saddle_term(point.r, point.z, link.bandwidth);
    let z = point.z;
    link.energy_scale() * e / (z * z * z) * (1.0 / z - 2.0)
}

/// Energy of one link as a function of its rate, with derivatives, all
/// evaluated from one inner solve. Precomputes the constants shared by
/// every evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LinkEnergy {
    /// `sigma2 dt / beta`
    k: f64,
    /// `ln2 / B`
    a: f64,
}

impl LinkEnergy {
    pub fn new(link: &LinkState) -> Self {
        LinkEnergy {
            k: link.energy_scale(),
            a: LN_2 / link.bandwidth,
        }
    }

    /// `(E, dE/dr, d2E/dr2)` at rate `r >= 0`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let u = inner_log_z(self.a * r.max(0.0));
        let z = u.exp();
        let value = self.k * z * u.exp_m1();
        let grad = self.k * self.a * z * z;
        let hess = self.k * self.a * self.a * 2.0 * z * z * z / (2.0 * z - 1.0);
        (value, grad, hess)
    }
}

fn link_states<'a>(csi: &'a CsiTensor, scenario: &'a Scenario) -> impl Iterator<Item = (usize, LinkState)> + 'a {
    let r = &scenario.radio;
    csi.grid().links().map(move |l| {
        let k = csi.grid().index(l).expect("valid link");
        (
            k,
            LinkState {
                beta: csi.beta_at(k),
                sigma2: r.noise_power_w,
                bandwidth: r.subcarrier_bandwidth_hz,
                dt: r.slot_seconds,
            },
        )
    })
}

fn check_shape(csi: &CsiTensor, len: usize) -> Result<()> {
    if len != csi.grid().len() {
        return Err(Error::Dimension {
            expected: csi.grid().len(),
            actual: len,
        });
    }
    Ok(())
}

/// Saddle function over all links with its gradients in `r` and `z`.
/// `zs` has the dense tensor layout; diagonal entries are ignored.
pub fn saddle_objective(
    rates: &RateAllocation,
    zs: &[f64],
    csi: &CsiTensor,
    scenario: &Scenario,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_shape(csi, rates.as_slice().len())?;
    check_shape(csi, zs.len())?;
    let mut value = 0.0;
    let mut grad_r = vec![0.0; zs.len()];
    let mut grad_z = vec![0.0; zs.len()];
    for (k, link) in link_states(csi, scenario) {
        let point = SaddlePoint {
            r: rates.as_slice()[k],
            z: zs[k],
        };
        if point.z < 1.0 || point.r < 0.0 {
            return Err(Error::Domain(format!(
                "saddle point needs z >= 1 and r >= 0 at {}",
                csi.grid().link(k)
            )));
        }
        let (v, gr, gz) = link_saddle(point, &link);
        value += v;
        grad_r[k] = gr;
        grad_z[k] = gz;
    }
    Ok((value, grad_r, grad_z))
}

/// Total energy in joules: sum of `power_from_rate(r) * dt` over links.
pub fn total_energy(rates: &RateAllocation, csi: &CsiTensor, scenario: &Scenario) -> Result<f64> {
    check_shape(csi, rates.as_slice().len())?;
    let mut total = 0.0;
    for (k, link) in link_states(csi, scenario) {
        let r = rates.as_slice()[k];
        if r != 0.0 {
            total += power_from_rate(r, &link)? * link.dt;
        }
    }
    Ok(total)
}

/// Envelope gradient of [`total_energy`] in `r`.
pub fn total_energy_gradient(rates: &RateAllocation, csi: &CsiTensor, scenario: &Scenario) -> Result<Vec<f64>> {
    check_shape(csi, rates.as_slice().len())?;
    let mut grad = vec![0.0; rates.as_slice().len()];
    for (k, link) in link_states(csi, scenario) {
        grad[k] = LinkEnergy::new(&link).eval(rates.as_slice()[k]).1;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn link_for_gamma(gamma: f64) -> LinkState {
        // sigma2 = 1, beta = gamma so that p = 1 W gives the requested SNR.
        LinkState::new(gamma, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn w_closed_forms() {
        assert_eq!(effective_w(1.0, 0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(effective_w(2.0, 1.0, 1.0).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(effective_w(6.0, 1.0, 1.0).unwrap(), 3.0, max_relative = 1e-15);
        assert!(matches!(effective_w(1.0, -1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rate_at_gamma_two() {
        // W = 2: 1 + 1 - log2(e) / 2
        let expected = 2.0 - 0.5 * LOG2_E;
        assert_relative_eq!(rate_from_gamma(2.0, 1.0), expected, max_relative = 1e-14);
        assert_relative_eq!(rate_from_gamma(2.0, 1.0), 1.2786525, max_relative = 1e-7);
        assert_eq!(rate_from_power(0.0, &link_for_gamma(2.0)).unwrap(), 0.0);
        assert!(rate_from_gamma(6.0, 1.0) > rate_from_gamma(2.0, 1.0));
    }

    #[test]
    fn rate_is_strictly_increasing_on_grid() {
        let link = link_for_gamma(3.0);
        let mut prev = -1.0;
        for k in 0..2000 {
            let p = 1e-6 * 1.01f64.powi(k);
            let r = rate_from_power(p, &link).unwrap();
            assert!(r > prev, "p = {p}");
            prev = r;
        }
    }

    #[test]
    fn inner_z_matches_w_at_gamma_two() {
        let link = link_for_gamma(2.0);
        let r = rate_from_power(1.0, &link).unwrap();
        assert!((inner_max_z(r, &link) - 2.0).abs() < 1e-9);
        assert_eq!(inner_max_z(0.0, &link), 1.0);
        assert_eq!(power_from_rate(0.0, &link).unwrap(), 0.0);
    }

    #[test]
    fn stationarity_at_inner_max() {
        for r in [1e-3, 0.5, 3.0, 20.0, 60.0] {
            let link = link_for_gamma(1.0);
            let z = inner_max_z(r, &link);
            let (_, _, gz) = link_saddle(SaddlePoint { r, z }, &link);
            assert!(gz.abs() < 1e-9 * link.energy_scale().max(1.0) * z, "r = {r}, dz = {gz}");
        }
    }

    #[test]
    fn power_matches_shannon_form_identity() {
        // sigma2 (W^2 - W) / beta == sigma2 / beta * (2^(r/B + log2 e (1 - 1/W)) - W)
        let link = LinkState::new(3.7e-12, 3.98e-15, 1e6, 30.0).unwrap();
        for p in [1e-3, 0.1, 1.0, 10.0, 50.0] {
            let w = effective_w(link.beta, p, link.sigma2).unwrap();
            let r = rate_from_power(p, &link).unwrap();
            let via_saddle = link.sigma2 / link.beta
                * ((r / link.bandwidth + LOG2_E * (1.0 - 1.0 / w)).exp2() - w);
            assert_relative_eq!(via_saddle, p, max_relative = 1e-9);
            assert_relative_eq!(link.sigma2 * (w * w - w) / link.beta, p, max_relative = 1e-12);
        }
    }

    #[test]
    fn unit_power_gives_one_slot_of_energy() {
        let link = LinkState::new(1e-11, 3.98e-15, 1e6, 30.0).unwrap();
        let r = rate_from_power(1.0, &link).unwrap();
        let p = power_from_rate(r, &link).unwrap();
        assert_relative_eq!(p * link.dt, 30.0, max_relative = 1e-10);
    }

    #[test]
    fn link_energy_derivatives() {
        let link = LinkState::new(1e-12, 3.98e-15, 1e6, 30.0).unwrap();
        let e = LinkEnergy::new(&link);
        for r in [1e3, 1e5, 2e6, 8e6] {
            let (v, g, h) = e.eval(r);
            assert_relative_eq!(v, power_from_rate(r, &link).unwrap() * 30.0, max_relative = 1e-12);
            let fd = oracle::central_difference(|x| e.eval(x).0, r, 1e-4 * r);
            assert_relative_eq!(g, fd, max_relative = 1e-6);
            let fd2 = oracle::central_difference(|x| e.eval(x).1, r, 1e-4 * r);
            assert_relative_eq!(h, fd2, max_relative = 1e-6);
        }
    }

    proptest! {
        #[test]
        fn power_rate_round_trip(exp in -3.0f64..2.0, beta_exp in -16.0f64..-9.0) {
            let link = LinkState::new(10f64.powf(beta_exp), 3.98e-15, 1e6, 30.0).unwrap();
            let p = 10f64.powf(exp);
            let r = rate_from_power(p, &link).unwrap();
            let back = power_from_rate(r, &link).unwrap();
            prop_assert!(((back - p) / p).abs() < 1e-8, "p = {}, back = {}", p, back);
        }

        #[test]
        fn inner_z_equals_w(gamma in 1e-6f64..1e8) {
            let link = link_for_gamma(gamma);
            let r = rate_from_power(1.0, &link).unwrap();
            let w = effective_w_from_gamma(gamma);
            prop_assert!(((inner_max_z(r, &link) - w) / w).abs() < 1e-9);
        }

        #[test]
        fn saddle_concave_in_z(r in 0.0f64..30.0, z in 1.0f64..1e4) {
            let link = link_for_gamma(1.0);
            let zz = link_saddle_zz(SaddlePoint { r, z }, &link);
            prop_assert!(zz <= 1e-12, "f_zz = {}", zz);
        }
    }
}
