mod args;
mod commands;
mod dataset;
mod error;

use std::process::ExitCode;

use clap::Parser;
use colonorm::io::PipelineConfig;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn load_config(cli: &Cli) -> CliResult<PipelineConfig> {
    match &cli.config {
        Some(path) => Ok(PipelineConfig::load(path)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let config = load_config(&cli)?;
    match cli.command {
        Command::Render(a) => commands::render(a, config),
        Command::Losses(a) => commands::losses(a, config),
        Command::Refine(a) => commands::refine(a, config),
        Command::Fuse(a) => commands::fuse(a, config),
        Command::Evaluate(a) => commands::evaluate(a, config),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
