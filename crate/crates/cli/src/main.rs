use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use gaussbook_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let report = run(cli)?;
    match &cli.common.out {
        Some(path) => fs::write(path, &report.csv)
            .with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(report.csv.as_bytes())?,
    }
    if let Some((path, text)) = &report.extra {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    for name in &report.failed {
        eprintln!("invariant failed: {name}");
    }
    Ok(report.failed.is_empty())
}
