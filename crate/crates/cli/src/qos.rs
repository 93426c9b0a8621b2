use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use seasched::baselines::max_feasible_qos;
use seasched::channel::predict_csi;
use seasched::par::{self, Parallelism};
use seasched::scenario::generate_random_topology;
use seasched::scheduler::SchedulerConfig;

use crate::args::QosSearchArgs;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
struct Row {
    seed: u64,
    delta_p_db: f64,
    /// Largest volume the BS can deliver to every vessel on its own.
    v_b: f64,
    /// Largest feasible uniform volume with UAV and relays; empty if below `v_b`.
    v_min_c1: Option<f64>,
    saturated: bool,
    below_bracket: bool,
    probes: usize,
    wall_ms: u128,
}

pub fn qos_search(args: &QosSearchArgs) -> CliResult<()> {
    if args.seeds.0.is_empty() || args.delta_p.is_empty() {
        return Err(CliError::Usage("--seeds and --delta-p must be nonempty".into()));
    }
    if !(args.tol > 0.0 && args.tol < 1.0) {
        return Err(CliError::Usage(format!("--tol must lie in (0, 1), got {}", args.tol)));
    }
    let mut config = SchedulerConfig::default();
    if args.sequential {
        config.parallelism = Parallelism::Sequential;
    }
    let cells: Vec<(u64, f64)> = args
        .seeds
        .0
        .iter()
        .flat_map(|&s| args.delta_p.iter().map(move |&d| (s, d)))
        .collect();
    let rows = par::map(config.parallelism, &cells, |&(seed, dp)| -> CliResult<Row> {
        let start = Instant::now();
        let scenario = generate_random_topology(&args.preset.params(seed, dp))?;
        let csi = predict_csi(&scenario)?;
        let search = max_feasible_qos(&scenario, &csi, None, args.tol, &config)?;
        Ok(Row {
            seed,
            delta_p_db: dp,
            v_b: search.direct_reference_bits,
            v_min_c1: search.volume_bits,
            saturated: search.saturated,
            below_bracket: search.below_bracket(),
            probes: search.probes.len(),
            wall_ms: start.elapsed().as_millis(),
        })
    });
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;

    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_path(path)?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }

    println!("{:>8} {:>14} {:>14} {:>8} {:>6} {:>6}", "dP_dB", "mean_v_b", "mean_v_c1", "ratio", "found", "sat");
    let mut by_dp: BTreeMap<i64, Vec<&Row>> = BTreeMap::new();
    for row in &rows {
        by_dp.entry((row.delta_p_db * 1e6).round() as i64).or_default().push(row);
    }
    for group in by_dp.values() {
        let n = group.len() as f64;
        let v_b = group.iter().map(|r| r.v_b).sum::<f64>() / n;
        let found: Vec<f64> = group.iter().filter_map(|r| r.v_min_c1).collect();
        let sat = group.iter().filter(|r| r.saturated).count();
        let (c1, ratio) = if found.is_empty() {
            ("-".to_string(), "-".to_string())
        } else {
            let c1 = found.iter().sum::<f64>() / found.len() as f64;
            (format!("{c1:.4e}"), format!("{:.3}", c1 / v_b))
        };
        println!(
            "{:>8.2} {:>14.4e} {c1:>14} {ratio:>8} {:>6} {sat:>6}",
            group[0].delta_p_db,
            v_b,
            format!("{}/{}", found.len(), group.len())
        );
    }
    Ok(())
}
