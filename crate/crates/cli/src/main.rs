use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use breather_forge::{execute, Cli, CliError, Command};

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn sidecar_path(cli: &Cli) -> Option<PathBuf> {
    match &cli.command {
        Command::Breather {
            sidecar: Some(p), ..
        } => Some(p.clone()),
        _ => cli.out.as_ref().map(|out| {
            let mut s = out.clone().into_os_string();
            s.push(".json");
            PathBuf::from(s)
        }),
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let outcome = execute(cli)?;
    match &cli.out {
        Some(path) => write_file(path, &outcome.body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(outcome.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
        }
    }
    if let (Some(text), Some(path)) = (&outcome.sidecar, sidecar_path(cli)) {
        write_file(&path, text)?;
    }
    if let Some(failure) = &outcome.failure {
        eprintln!("breather-forge: {failure}");
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("breather-forge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
