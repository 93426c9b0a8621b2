use seasched::par::Parallelism;
use seasched::validate::{run_validation, ValidateOptions};

use crate::args::ValidateArgs;
use crate::error::{CliError, CliResult};

pub fn validate(args: &ValidateArgs) -> CliResult<()> {
    let opts = ValidateOptions {
        seed: args.seed,
        quick: args.quick,
        parallelism: if args.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::default()
        },
    };
    let outcomes = run_validation(&opts);
    println!("{:<28} {:>7} {:>12} {:>12}  result", "property", "cases", "worst", "tolerance");
    for o in &outcomes {
        println!(
            "{:<28} {:>7} {:>12.3e} {:>12.3e}  {}",
            o.name,
            o.cases,
            o.worst,
            o.tolerance,
            if o.passed() { "PASS" } else { "FAIL" }
        );
    }
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&outcomes)?;
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    let failures: Vec<String> = outcomes
        .iter()
        .filter_map(|o| {
            o.counterexample
                .as_ref()
                .map(|c| format!("{} (case seed {}): {}", o.name, c.case_seed, c.detail))
        })
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failures.join("; ")))
    }
}
