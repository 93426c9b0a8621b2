//! Large-scale gains and peak rates from geometry.
//!
//! Three path-loss models are used:
//! * links with exactly one UAV endpoint: logistic line-of-sight model on the
//!   slant range, elevation taken from the height difference;
//! * UAV to UAV: free space;
//! * everything else (shore and vessels): the sea model on the horizontal
//!   distance with both antenna heights.

use std::f64::consts::PI;
use std::io::Write;

use crate::links::{LinkGrid, LinkSlot, NodeRole};
use crate::par::{self, Parallelism};
use crate::ratelink::rate_from_gamma;
use crate::scenario::{AirParams, Scenario};
use crate::{Error, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `20 log10(d) + 20 log10(4 pi f_c / 300)` with `d` in meters, `f_c` in MHz.
pub fn pathloss_free_space_db(d: f64, f_c: f64) -> Result<f64> {
    positive("distance", d)?;
    positive("carrier", f_c)?;
    Ok(20.0 * d.log10() + 20.0 * (4.0 * PI * f_c / 300.0).log10())
}

/// Air-to-ground loss: `A / (1 + a e^(-b (rho - a))) + B` with
/// `A = eta_LOS - eta_NLOS`, `B` the free-space term plus `eta_NLOS` and
/// `rho = asin(h_u / d)` in degrees.
pub fn pathloss_uav_db(d: f64, h_u: f64, f_c: f64, air: &AirParams) -> Result<f64> {
    positive("distance", d)?;
    positive("height", h_u)?;
    if d < h_u {
        return Err(Error::Domain(format!(
            "slant range {d} m is shorter than height {h_u} m"
        )));
    }
    let rho = (h_u / d).asin().to_degrees();
    let big_a = air.eta_los_db - air.eta_nlos_db;
    let big_b = pathloss_free_space_db(d, f_c)? + air.eta_nlos_db;
    Ok(big_a / (1.0 + air.a * (-air.b * (rho - air.a)).exp()) + big_b)
}

/// Maritime loss between two low antennas at horizontal distance `d`.
pub fn pathloss_sea_db(d: f64, h_tx: f64, h_rx: f64, f_c: f64, c_db: f64) -> Result<f64> {
    positive("distance", d)?;
    positive("transmitter height", h_tx)?;
    positive("receiver height", h_rx)?;
    positive("carrier", f_c)?;
    Ok((44.9 - 6.55 * h_tx.log10()) * (d / 1000.0).log10()
        + 45.5
        + (35.46 - 1.1 * h_rx) * f_c.log10()
        - 13.82 * h_rx.log10()
        + 0.7 * h_rx
        + c_db)
}

pub fn db_to_gain(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Peak rate of a link at full power, in bits/s.
pub fn peak_rate(beta: f64, p_max: f64, sigma2: f64, bandwidth: f64) -> Result<f64> {
    positive("beta", beta)?;
    positive("max power", p_max)?;
    positive("noise power", sigma2)?;
    positive("bandwidth", bandwidth)?;
    Ok(rate_from_gamma(beta * p_max / sigma2, bandwidth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathLossModel {
    AirToGround,
    FreeSpace,
    Sea,
}

pub fn model_for(tx: NodeRole, rx: NodeRole) -> PathLossModel {
    match (tx == NodeRole::Uav, rx == NodeRole::Uav) {
        (true, true) => PathLossModel::FreeSpace,
        (false, false) => PathLossModel::Sea,
        _ => PathLossModel::AirToGround,
    }
}

/// Path loss of one link-slot of `scenario`.
pub fn link_loss_db(scenario: &Scenario, link: LinkSlot) -> Result<f64> {
    let grid = scenario.grid();
    let a = scenario.position(link.tx, link.slot);
    let b = scenario.position(link.rx, link.slot);
    let r = &scenario.radio;
    match model_for(grid.role(link.tx), grid.role(link.rx)) {
        PathLossModel::FreeSpace => pathloss_free_space_db(a.distance(&b), r.carrier_mhz),
        PathLossModel::AirToGround => pathloss_uav_db(a.distance(&b), (a.z - b.z).abs(), r.carrier_mhz, &r.air),
        PathLossModel::Sea => pathloss_sea_db(a.horizontal_distance(&b), a.z, b.z, r.carrier_mhz, r.env_constant_db),
    }
    .map_err(|e| Error::Channel {
        link,
        source: Box::new(e),
    })
}

/// Gains and peak rates of every link-slot. Invalid (diagonal) entries hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiTensor {
    grid: LinkGrid,
    beta: Vec<f64>,
    peak_rate: Vec<f64>,
}

impl CsiTensor {
    /// Builds a tensor from raw dense arrays; mostly for tests.
    pub fn from_parts(grid: LinkGrid, beta: Vec<f64>, peak_rate: Vec<f64>) -> Result<Self> {
        for v in [&beta, &peak_rate] {
            if v.len() != grid.len() {
                return Err(Error::Dimension {
                    expected: grid.len(),
                    actual: v.len(),
                });
            }
        }
        Ok(CsiTensor { grid, beta, peak_rate })
    }

    pub fn grid(&self) -> &LinkGrid {
        &self.grid
    }

    pub fn beta(&self, tx: usize, rx: usize, slot: usize) -> f64 {
        self.grid.index(LinkSlot::new(tx, rx, slot)).map_or(0.0, |k| self.beta[k])
    }

    pub fn peak_rate(&self, tx: usize, rx: usize, slot: usize) -> f64 {
        self.grid
            .index(LinkSlot::new(tx, rx, slot))
            .map_or(0.0, |k| self.peak_rate[k])
    }

    pub fn beta_at(&self, index: usize) -> f64 {
        self.beta[index]
    }

    pub fn peak_rate_at(&self, index: usize) -> f64 {
        self.peak_rate[index]
    }

    pub fn peak_rates(&self) -> &[f64] {
        &self.peak_rate
    }

    /// Writes `i,j,t,beta,peak_rate_bps` rows, `t` 1-based.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "t", "beta", "peak_rate_bps"])?;
        for l in self.grid.links() {
            let k = self.grid.index(l).expect("valid link");
            w.write_record([
                l.tx.to_string(),
                l.rx.to_string(),
                (l.slot + 1).to_string(),
                format!("{:e}", self.beta[k]),
                format!("{}", self.peak_rate[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn predict_csi(scenario: &Scenario) -> Result<CsiTensor> {
    predict_csi_with(scenario, Parallelism::Sequential)
}

/// [`predict_csi`] with the slot loop optionally spread over the pool.
pub fn predict_csi_with(scenario: &Scenario, mode: Parallelism) -> Result<CsiTensor> {
    let grid = scenario.grid();
    let r = &scenario.radio;
    let per_slot = par::map_range(mode, grid.slots, |t| {
        grid.links_in_slot(t)
            .map(|l| {
                let beta = db_to_gain(link_loss_db(scenario, l)?);
                let rate = peak_rate(beta, scenario.max_power(l.tx), r.noise_power_w, r.subcarrier_bandwidth_hz)
                    .map_err(|e| Error::Channel {
                        link: l,
                        source: Box::new(e),
                    })?;
                Ok((l, beta, rate))
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut beta = vec![0.0; grid.len()];
    let mut peak = vec![0.0; grid.len()];
    for slot in per_slot {
        for (l, b, p) in slot? {
            let k = grid.index(l).expect("valid link");
            beta[k] = b;
            peak[k] = p;
        }
    }
    Ok(CsiTensor {
        grid,
        beta,
        peak_rate: peak,
    })
}
