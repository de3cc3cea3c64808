use std::process::ExitCode;

use clap::Parser;
use hammfix_cli::{emit, run, Cli, RunConfig, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = RunConfig::resolve(cli).and_then(|cfg| {
        let outcome = run(&cfg)?;
        emit(&cfg, &outcome)?;
        Ok(outcome.status)
    });
    match result {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("hammfix: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
