use proptest::prelude::*;

use super::*;
use crate::channel::predict_csi;
use crate::links::LinkSlot;
use crate::oracle::tiny_grid_energy;
use crate::scenario::tests_support::single_link;
use crate::scenario::{generate_random_topology, qos_targets_from_alpha, TopologyParams};

fn instance(params: &TopologyParams, alpha: f64) -> (Scenario, CsiTensor) {
    let mut s = generate_random_topology(params).unwrap();
    let csi = predict_csi(&s).unwrap();
    let v = qos_targets_from_alpha(&s, &csi, alpha).unwrap();
    s.set_qos_volumes(&v).unwrap();
    (s, csi)
}

fn small(seed: u64) -> TopologyParams {
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

fn solve(s: &Scenario, csi: &CsiTensor, zeros: &ForcedZeroSet) -> (RateAllocation, SolverReport) {
    solve_relaxed(s, csi, zeros, &SolverOptions::default()).unwrap()
}

#[test]
fn zero_qos_is_silent() {
    let s = single_link(100.0);
    let csi = predict_csi(&s).unwrap();
    let (r, rep) = solve(&s, &csi, &ForcedZeroSet::new());
    assert_eq!(rep.status, SolverStatus::Converged);
    assert_eq!(rep.objective, 0.0);
    assert!(r.as_slice().iter().all(|&x| x == 0.0));
}

#[test]
fn full_volume_drives_link_to_peak() {
    let mut s = single_link(100.0);
    let csi = predict_csi(&s).unwrap();
    let peak = csi.peak_rate(0, 1, 0);
    s.set_qos_volumes(&[peak * s.radio.slot_seconds]).unwrap();
    let (r, rep) = solve(&s, &csi, &ForcedZeroSet::new());
    assert_eq!(rep.status, SolverStatus::Converged);
    let got = r.get(LinkSlot::new(0, 1, 0));
    assert!((got - peak).abs() <= 1e-8 * peak, "{got} vs {peak}");
    let full = 50.0 * s.radio.slot_seconds;
    assert!((rep.objective - full).abs() <= 1e-6 * full, "{}", rep.objective);
}

#[test]
fn unreachable_volume_is_certified() {
    let mut s = single_link(100.0);
    let csi = predict_csi(&s).unwrap();
    let peak = csi.peak_rate(0, 1, 0);
    s.set_qos_volumes(&[1.01 * peak * s.radio.slot_seconds]).unwrap();
    let (r, rep) = solve(&s, &csi, &ForcedZeroSet::new());
    assert_eq!(rep.status, SolverStatus::Infeasible);
    assert!(rep.certificate.as_deref().unwrap().contains("vessel 1"));
    assert_eq!(rep.energy(), f64::INFINITY);
    assert!(r.as_slice().iter().all(|&x| x == 0.0));
}

#[test]
fn shared_subcarrier_conflict_is_certified() {
    // Two sinks each reachable alone but not together on one subcarrier.
    let mut s = single_link(100.0);
    s.counts.vessels = 2;
    let mut second = s.nodes[1].clone();
    second.trajectory[0].y = 10.0;
    s.nodes.push(second);
    s.qos.push(s.qos[0]);
    s.validate().unwrap();
    let csi = predict_csi(&s).unwrap();
    let dt = s.radio.slot_seconds;
    let v = [0.6 * csi.peak_rate(0, 1, 0) * dt, 0.6 * csi.peak_rate(0, 2, 0) * dt];
    s.set_qos_volumes(&v).unwrap();
    let (_, rep) = solve(&s, &csi, &ForcedZeroSet::new());
    assert_eq!(rep.status, SolverStatus::Infeasible, "{rep:?}");
    assert!(rep.certificate.is_some());
}

#[test]
fn tiny_instance_matches_grid_search() {
    for seed in [3, 11] {
        let (s, csi) = instance(&TopologyParams::tiny(seed), 0.3);
        let (_, rep) = solve(&s, &csi, &ForcedZeroSet::new());
        assert_eq!(rep.status, SolverStatus::Converged);
        let grid = tiny_grid_energy(&s, &csi, 100).expect("grid has a feasible point");
        assert!(rep.objective <= grid * (1.0 + 1e-9), "{} > {grid}", rep.objective);
        assert!(rep.objective >= grid * 0.99, "{} vs {grid}", rep.objective);
    }
}

#[test]
fn full_scale_residuals_within_tolerance() {
    let (s, csi) = instance(&TopologyParams::standard(1), 1.0 / 3.0);
    let zeros = ForcedZeroSet::new();
    let (r, rep) = solve(&s, &csi, &zeros);
    assert_eq!(rep.status, SolverStatus::Converged);
    eprintln!("full-scale solve: {} iterations", rep.iterations);
    assert!(rep.iterations < 60, "{}", rep.iterations);
    let vmax = s.qos.iter().map(|q| q.volume_bits).fold(0.0, f64::max);
    let rmax = csi.peak_rates().iter().copied().fold(0.0, f64::max);
    let res = constraint_residuals(&r, &s, &csi, &zeros);
    assert!(res.max_scaled(vmax, rmax) <= 1e-6, "{res:?}");
    let total = crate::ratelink::total_energy(&r, &csi, &s).unwrap();
    assert!((total - rep.objective).abs() <= 1e-9 * total);
}

#[test]
fn solves_are_deterministic() {
    let (s, csi) = instance(&small(5), 0.4);
    let (r1, rep1) = solve(&s, &csi, &ForcedZeroSet::new());
    let (r2, rep2) = solve(&s, &csi, &ForcedZeroSet::new());
    assert_eq!(rep1, rep2);
    assert!(r1.as_slice().iter().zip(r2.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn trace_csv_has_one_row_per_iteration() {
    let (s, csi) = instance(&small(2), 0.3);
    let opts = SolverOptions {
        trace: true,
        ..SolverOptions::default()
    };
    let (_, rep) = solve_relaxed(&s, &csi, &ForcedZeroSet::new(), &opts).unwrap();
    let mut buf = Vec::new();
    rep.write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("iter,objective,max_residual\n"));
    assert_eq!(text.lines().count(), rep.iterations + 2);
}

#[test]
fn residuals_of_zero_rates() {
    let mut s = single_link(500.0);
    let csi = predict_csi(&s).unwrap();
    let zero = RateAllocation::zeros(s.grid());
    let none = ForcedZeroSet::new();
    assert_eq!(constraint_residuals(&zero, &s, &csi, &none), ResidualReport::default());
    s.set_qos_volumes(&[1234.5]).unwrap();
    let res = constraint_residuals(&zero, &s, &csi, &none);
    assert_eq!(res.qos, 1234.5);
    assert_eq!(res.half_duplex + res.subcarrier + res.causality + res.bounds, 0.0);
}

#[test]
fn residuals_flag_each_family() {
    let (s, csi) = instance(&small(4), 0.0);
    let grid = s.grid();
    let mut r = RateAllocation::zeros(grid);
    // Relay 2 forwards in slot 1 without having received anything and also
    // receives in the same slot.
    let fwd = LinkSlot::new(2, 3, 1);
    let inc = LinkSlot::new(0, 2, 1);
    r.set(fwd, csi.peak_rate(2, 3, 1));
    r.set(inc, csi.peak_rate(0, 2, 1));
    let zeros: ForcedZeroSet = [fwd].into_iter().collect();
    let res = constraint_residuals(&r, &s, &csi, &zeros);
    assert!((res.half_duplex - 1.0).abs() < 1e-12);
    assert!(res.causality > 0.0);
    assert_eq!(res.forced_zero, csi.peak_rate(2, 3, 1));
    assert_eq!(res.subcarrier, 0.0);
}

#[test]
fn schedule_violation_counts() {
    let (s, _) = instance(&small(4), 0.0);
    let mut sched = Schedule::empty(s.grid());
    assert!(schedule_violations(&sched, &s).is_clean());
    sched.set(LinkSlot::new(0, 2, 1), true);
    sched.set(LinkSlot::new(2, 3, 1), true);
    sched.set(LinkSlot::new(0, 1, 1), true);
    let v = schedule_violations(&sched, &s);
    assert_eq!(v.half_duplex, 1);
    assert_eq!(v.subcarrier, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn zeros_never_lower_energy(seed in 0u64..1000, picks in prop::collection::vec(0usize..10_000, 1..12), split in 0usize..12) {
        let (s, csi) = instance(&small(seed), 0.3);
        let grid = s.grid();
        let all: Vec<LinkSlot> = grid.links().collect();
        let chosen: Vec<LinkSlot> = picks.iter().map(|p| all[p % all.len()]).collect();
        let z1: ForcedZeroSet = chosen.iter().take(split).copied().collect();
        let z2: ForcedZeroSet = chosen.iter().copied().collect();
        prop_assert!(z1.is_subset(&z2));
        let (r1, rep1) = solve(&s, &csi, &z1);
        let (r2, rep2) = solve(&s, &csi, &z2);
        if !rep1.is_feasible() {
            prop_assert!(!rep2.is_feasible());
        }
        let e1 = rep1.energy();
        let e2 = rep2.energy();
        prop_assert!(e2 == e1 || e2 >= e1 - 1e-7 * e1.max(1.0), "{} < {}", e2, e1);
        for l in z2.iter() {
            prop_assert_eq!(r2.get(*l), 0.0);
        }
        for l in z1.iter() {
            prop_assert_eq!(r1.get(*l), 0.0);
        }
    }
}

