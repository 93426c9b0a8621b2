use std::fs::File;
use std::io::BufWriter;

use seasched::channel::predict_csi;
use seasched::scenario::{generate_random_topology, qos_targets_from_alpha, save_scenario};

use crate::args::GenerateArgs;
use crate::error::{CliError, CliResult};

pub fn generate(args: &GenerateArgs) -> CliResult<()> {
    let mut params = args.preset.params(args.seed, args.delta_p);
    if args.uav_budget_j.is_some() {
        params.uav_energy_budget_j = args.uav_budget_j;
    }
    let mut scenario = generate_random_topology(&params)?;
    let csi = predict_csi(&scenario)?;
    if let Some(alpha) = args.alpha {
        let volumes = qos_targets_from_alpha(&scenario, &csi, alpha)?;
        scenario.set_qos_volumes(&volumes)?;
    }
    save_scenario(&scenario, &args.out)?;
    if let Some(path) = &args.csi_out {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        csi.write_csv(BufWriter::new(file))?;
    }
    println!(
        "wrote {} (I={}, J={}, J'={}, T={}, N={})",
        args.out.display(),
        scenario.counts.uavs,
        scenario.counts.vessels,
        scenario.counts.relay_vessels,
        scenario.counts.slots,
        scenario.counts.subcarriers
    );
    Ok(())
}
