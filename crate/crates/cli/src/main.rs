use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    tablogic_cli::run(tablogic_cli::Cli::parse())
}
