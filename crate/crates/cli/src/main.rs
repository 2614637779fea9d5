use std::process::ExitCode;

use clap::Parser;
use helmex_cli::{error_code, run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = cli.flags.resolve().and_then(|cfg| run(cli.command, &cfg));
    match result {
        Ok(outcome) if outcome.converged() => ExitCode::SUCCESS,
        Ok(outcome) => {
            for failure in &outcome.failures {
                eprintln!("not_converged: {failure}");
            }
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("{}: {err:#}", error_code(&err));
            ExitCode::from(2)
        }
    }
}
