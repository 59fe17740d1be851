mod args;
mod commands;
mod error;
mod output;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Estimate(a) => commands::cmd_estimate(a),
        Command::Phi(a) => commands::cmd_phi(a),
        Command::Risk(a) => commands::cmd_risk(a),
        Command::Region(a) => commands::cmd_region(a),
        Command::Verify(a) => verify::cmd_verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gbayes: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
