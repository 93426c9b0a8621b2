use std::path::Path;
use std::time::Instant;

use seasched::baselines::{run_scheme, Scheme};
use seasched::channel::predict_csi;
use seasched::par::{self, Parallelism};
use seasched::report::{append_aggregate, RunReport};
use seasched::scenario::{generate_random_topology, load_scenario, qos_targets_from_alpha, Scenario};
use seasched::scheduler::SchedulerConfig;
use seasched::NodeRole;

use crate::args::RunArgs;
use crate::error::{CliError, CliResult};

/// Relative slack for the bound <= exhaustive <= proposed check.
const ORDERING_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Cell {
    label: String,
    seed: Option<u64>,
    alpha: Option<f64>,
}

struct CellOutput {
    cell: Cell,
    reports: Vec<RunReport>,
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let config = config(args);
    let base = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Some(load_scenario(&text)?)
        }
        None => None,
    };
    let cells = cells(args)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;

    let outputs = par::map(config.parallelism, &cells, |cell| run_cell(args, &config, base.as_ref(), cell));
    let outputs = outputs.into_iter().collect::<CliResult<Vec<_>>>()?;

    let aggregate = args.aggregate.clone().unwrap_or_else(|| args.out.join("aggregate.csv"));
    let mut infeasible = Vec::new();
    let mut violations = Vec::new();
    println!(
        "{:<28} {:<10} {:>16} {:>5} {:>5} {:>8} {:>9}",
        "cell", "scheme", "energy_j", "s1", "s2", "probes", "wall_ms"
    );
    for out in &outputs {
        let mut rows = Vec::new();
        for rep in &out.reports {
            let path = args.out.join(format!("{}_{}.json", out.cell.label, rep.scheme.name()));
            std::fs::write(&path, rep.to_json()?).map_err(|e| CliError::io(&path, e))?;
            print_row(&out.cell.label, rep);
            rows.push(rep.aggregate_row());
            if !rep.feasible && matches!(rep.scheme, Scheme::Proposed | Scheme::Bound | Scheme::Exhaustive) {
                infeasible.push(format!("{} {}", out.cell.label, rep.scheme));
            }
        }
        append_aggregate(&aggregate, &rows)?;
        violations.extend(ordering_violations(&out.cell.label, &out.reports));
    }
    println!("aggregate: {}", aggregate.display());

    if !violations.is_empty() {
        return Err(CliError::Validation(violations.join("; ")));
    }
    if !infeasible.is_empty() {
        return Err(CliError::Infeasible(infeasible.join(", ")));
    }
    Ok(())
}

fn config(args: &RunArgs) -> SchedulerConfig {
    let mut config = SchedulerConfig::default();
    if let Some(eps) = args.eps_rel {
        config.eps_rel = eps;
    }
    if let Some(n) = args.max_iterations {
        config.solver.max_iterations = n;
    }
    if args.no_enforce_bounds {
        config.enforce_bounds = false;
    }
    if args.sequential {
        config.parallelism = Parallelism::Sequential;
    }
    config
}

fn cells(args: &RunArgs) -> CliResult<Vec<Cell>> {
    if let Some(path) = &args.scenario {
        let stem = stem(path);
        if args.alpha.is_empty() {
            return Ok(vec![Cell {
                label: stem,
                seed: None,
                alpha: None,
            }]);
        }
        return Ok(args
            .alpha
            .iter()
            .map(|&a| Cell {
                label: format!("{stem}_alpha{a}"),
                seed: None,
                alpha: Some(a),
            })
            .collect());
    }
    if args.alpha.is_empty() {
        return Err(CliError::Usage("--generate needs at least one --alpha".into()));
    }
    if args.seeds.0.is_empty() {
        return Err(CliError::Usage("--seeds is empty".into()));
    }
    let mut cells = Vec::new();
    for &seed in &args.seeds.0 {
        for &a in &args.alpha {
            cells.push(Cell {
                label: format!("seed{seed}_alpha{a}"),
                seed: Some(seed),
                alpha: Some(a),
            });
        }
    }
    Ok(cells)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into())
}

fn build(args: &RunArgs, base: Option<&Scenario>, cell: &Cell) -> CliResult<Scenario> {
    let mut scenario = match (base, cell.seed) {
        (Some(s), _) => s.clone(),
        (None, Some(seed)) => {
            let mut params = args.preset.params(seed, 0.0);
            params.uav_energy_budget_j = args.uav_budget_j.or(params.uav_energy_budget_j);
            generate_random_topology(&params)?
        }
        (None, None) => unreachable!("generated cells carry a seed"),
    };
    if let Some(budget) = args.uav_budget_j {
        for node in scenario.nodes.iter_mut().filter(|n| n.role == NodeRole::Uav) {
            node.energy_budget_j = Some(budget);
        }
    }
    Ok(scenario)
}

fn run_cell(args: &RunArgs, config: &SchedulerConfig, base: Option<&Scenario>, cell: &Cell) -> CliResult<CellOutput> {
    let mut scenario = build(args, base, cell)?;
    let csi = predict_csi(&scenario)?;
    if let Some(alpha) = cell.alpha {
        let volumes = qos_targets_from_alpha(&scenario, &csi, alpha)?;
        scenario.set_qos_volumes(&volumes)?;
    }
    let mut reports = Vec::with_capacity(args.schemes.len());
    for &scheme in &args.schemes {
        let start = Instant::now();
        let result = run_scheme(scheme, &scenario, &csi, config)?;
        let wall_ms = start.elapsed().as_millis();
        reports.push(RunReport::new(&result, config, cell.seed, cell.alpha, wall_ms));
    }
    Ok(CellOutput {
        cell: cell.clone(),
        reports,
    })
}

fn print_row(label: &str, rep: &RunReport) {
    let energy = rep.energy_joules.map_or("infeasible".to_string(), |e| format!("{e:.6e}"));
    let (s1, s2, probes) = rep
        .stats
        .as_ref()
        .map_or(("-".into(), "-".into(), "-".into()), |s| {
            (s.s1.to_string(), s.s2.to_string(), s.subproblems.to_string())
        });
    println!(
        "{label:<28} {:<10} {energy:>16} {s1:>5} {s2:>5} {probes:>8} {:>9}",
        rep.scheme.name(),
        rep.wall_ms
    );
}

fn energy(reports: &[RunReport], scheme: Scheme) -> Option<f64> {
    reports.iter().find(|r| r.scheme == scheme).and_then(|r| r.energy_joules)
}

fn ordering_violations(label: &str, reports: &[RunReport]) -> Vec<String> {
    let chain = [Scheme::Bound, Scheme::Exhaustive, Scheme::Proposed];
    let present: Vec<(Scheme, f64)> = chain.iter().filter_map(|&s| energy(reports, s).map(|e| (s, e))).collect();
    present
        .windows(2)
        .filter(|w| w[0].1 > w[1].1 + ORDERING_TOL * w[1].1.abs().max(1.0))
        .map(|w| format!("{label}: {} {:.6e} > {} {:.6e}", w[0].0, w[0].1, w[1].0, w[1].1))
        .collect()
}

