use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qgame_cli::{execute, Cli, CliError};

fn emit(cli: &Cli, json: &str) -> Result<(), CliError> {
    match &cli.output {
        Some(path) => std::fs::write(path, json).map_err(|e| CliError::Internal(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(json.as_bytes()).map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli).and_then(|out| emit(&cli, &out.json).map(|()| out)) {
        Ok(out) => {
            eprintln!("{}", out.summary);
            out.exit_code
        }
        Err(e) => {
            eprintln!("qgame: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code)
}
