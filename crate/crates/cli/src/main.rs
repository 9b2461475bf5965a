use std::io::{self, IsTerminal};
use std::process::ExitCode;

use clap::Parser;
use npls_cli::{execute, Cli};

fn main() -> anyhow::Result<ExitCode> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            e.print()?;
            return Ok(ExitCode::from(u8::from(usage_error)));
        }
    };
    let stdin = io::stdin();
    let prompt = stdin.is_terminal();
    let mut out = io::stdout().lock();
    match execute(&cli, stdin.lock(), &mut out, prompt) {
        Ok(()) => Ok(ExitCode::SUCCESS),
        Err(e) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(e.exit_code() as u8))
        }
    }
}
