use std::process::ExitCode;

use clap::Parser;
use tiltlab::{dispatch, Cli};

fn main() -> ExitCode {
    ExitCode::from(dispatch(&Cli::parse()))
}
