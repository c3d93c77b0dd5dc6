//! Declarative experiment runner for `tiltlab-core`: TOML configs in, a
//! JSON report and CSV plot tables out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{load_config, parse_config, ExperimentConfig, ExperimentKind};
pub use error::CliError;
pub use run::{execute, write_outcome, RunOutcome, EXIT_ERROR, EXIT_FINDING, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "tiltlab", version, about = "Tilted-functional experiments: uniqueness, fixed points, minimax gaps, sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment named in the config.
    Run(RunArgs),
    /// Parse and validate a config, printing the resolved form.
    Validate(CommonArgs),
    /// Run a SEARCH_COUNTEREXAMPLE config.
    Sweep(RunArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Replaces the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted `key=value`, value in TOML syntax; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory; replaces `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn load(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut overrides = args.overrides.clone();
    if let Some(s) = args.seed {
        overrides.push(format!("seed={s}"));
    }
    load_config(&args.config, &overrides, None)
}

fn run_command(args: &RunArgs, sweep_only: bool) -> Result<u8, CliError> {
    let mut overrides = args.common.overrides.clone();
    if let Some(out) = &args.out {
        overrides.push(format!("output.dir={}", toml::Value::String(out.display().to_string())));
    }
    if let Some(s) = args.common.seed {
        overrides.push(format!("seed={s}"));
    }
    let config = load_config(&args.common.config, &overrides, None)?;
    if sweep_only && config.experiment != ExperimentKind::SearchCounterexample {
        return Err(CliError::Invalid {
            field: "experiment".into(),
            message: "`sweep` needs experiment = \"SEARCH_COUNTEREXAMPLE\"".into(),
        });
    }
    let outcome = match args.jobs {
        Some(0) => return Err(CliError::Override("--jobs must be positive".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Override(e.to_string()))?
            .install(|| execute(&config)),
        None => execute(&config),
    };
    let dir = PathBuf::from(&config.output.dir);
    let path = write_outcome(&outcome, &dir, &config.output.report)?;
    if let Some(msg) = outcome.report["error"]["message"].as_str() {
        eprintln!("error: {msg}");
    }
    println!("{}: {}", outcome.status, path.display());
    Ok(outcome.exit_code)
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn dispatch(cli: &Cli) -> u8 {
    let result = match &cli.command {
        Command::Run(a) => run_command(a, false),
        Command::Sweep(a) => run_command(a, true),
        Command::Validate(a) => load(a).and_then(|c| {
            let text = toml::to_string(&c).map_err(|e| CliError::Override(e.to_string()))?;
            print!("{text}");
            Ok(EXIT_OK)
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}
