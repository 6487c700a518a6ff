//! `mpm` command-line tool.

mod args;
mod commands;
mod error;
mod render;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, Result};
use settings::Settings;

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("MPM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("MPM_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let s = Settings::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Encode(a) => commands::encode(s, a),
        Command::Track(a) => commands::track(s, a),
        Command::Eval(a) => commands::eval(s, a),
        Command::Simulate(a) => commands::simulate_cmd(s, a),
        Command::Render(a) => commands::render_cmd(s, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
