use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use seasched::baselines::Scheme;
use seasched::scenario::TopologyParams;

#[derive(Debug, Parser)]
#[command(name = "seasched", version, about = "Link scheduling and rate allocation for maritime relay networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scenario file.
    Generate(GenerateArgs),
    /// Run one or more schemes on loaded or generated scenarios.
    Run(RunArgs),
    /// Run the built-in property checks.
    Validate(ValidateArgs),
    /// Bisect the largest uniform QoS volume that is still feasible.
    QosSearch(QosSearchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Standard,
    Tiny,
    CoverageHole,
}

impl Preset {
    pub fn params(self, seed: u64, delta_p_db: f64) -> TopologyParams {
        let mut p = match self {
            Preset::Standard => TopologyParams::standard(seed),
            Preset::Tiny => TopologyParams::tiny(seed),
            Preset::CoverageHole => TopologyParams::coverage_hole(seed, delta_p_db),
        };
        p.power_offset_db = delta_p_db;
        p
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "standard")]
    pub preset: Preset,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sets every QoS volume to this fraction of the vessel's direct capacity.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Power offset in dB applied to every node.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub delta_p: f64,
    #[arg(long)]
    pub uav_budget_j: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the predicted CSI as CSV.
    #[arg(long)]
    pub csi_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario", "generate"])))]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Generate scenarios from `--preset`, `--seeds` and `--alpha`.
    #[arg(long)]
    pub generate: bool,
    #[arg(long, value_enum, default_value = "standard")]
    pub preset: Preset,
    /// `a..b` (inclusive) or a comma-separated list.
    #[arg(long, value_parser = parse_seeds, default_value = "1")]
    pub seeds: SeedList,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_scheme)]
    pub schemes: Vec<Scheme>,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Aggregate CSV; defaults to `<out>/aggregate.csv`.
    #[arg(long)]
    pub aggregate: Option<PathBuf>,
    #[arg(long)]
    pub eps_rel: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub uav_budget_j: Option<f64>,
    #[arg(long)]
    pub no_enforce_bounds: bool,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub quick: bool,
    /// Write the outcomes as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct QosSearchArgs {
    #[arg(long, value_enum, default_value = "coverage-hole")]
    pub preset: Preset,
    #[arg(long, value_parser = parse_seeds, default_value = "1")]
    pub seeds: SeedList,
    #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
    pub delta_p: Vec<f64>,
    /// Bisection stops when the bracket is narrower than this fraction of its initial width.
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad seed `{a}`: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad seed `{b}`: {e}"))?;
        if b < a {
            return Err(format!("empty seed range {s}"));
        }
        return Ok(SeedList((a..=b).collect()));
    }
    let seeds = s
        .split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|e| format!("bad seed `{x}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SeedList(seeds))
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse::<Scheme>().map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1..3").unwrap().0, vec![1, 2, 3]);
        assert_eq!(parse_seeds("4, 9").unwrap().0, vec![4, 9]);
        assert_eq!(parse_seeds("7").unwrap().0, vec![7]);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn schemes_are_required() {
        let err = Cli::try_parse_from(["seasched", "run", "--generate"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let ok = Cli::try_parse_from(["seasched", "run", "--generate", "--schemes", "proposed,bound"]).unwrap();
        let Command::Run(run) = ok.command else { panic!() };
        assert_eq!(run.schemes, vec![Scheme::Proposed, Scheme::Bound]);
    }
}
