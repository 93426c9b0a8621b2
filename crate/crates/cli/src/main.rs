mod args;
mod error;
mod generate;
mod qos;
mod run;
mod validate;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    seasched::par::init_from_env();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate::generate(a),
        Command::Run(a) => run::run(a),
        Command::Validate(a) => validate::validate(a),
        Command::QosSearch(a) => qos::qos_search(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
