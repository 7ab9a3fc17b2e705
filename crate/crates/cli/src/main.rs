use std::process::ExitCode;

use clap::Parser;
use rfsplat_cli::commands::{run, Cli};

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
