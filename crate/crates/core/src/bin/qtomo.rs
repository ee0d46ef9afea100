use std::process::ExitCode;

use clap::Parser;
use qtomo::cli::{exit_code, run, status_code, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => ExitCode::from(status_code(status)),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
