mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};
use commands::UsageError;
use manifest::RunManifest;

fn parse(argv: &[String]) -> std::result::Result<Cli, clap::Error> {
    Cli::try_parse_from(std::iter::once("svqa".to_string()).chain(argv.iter().cloned()))
}

fn configure_pool(jobs: Option<usize>) -> Result<()> {
    let Some(n) = jobs else { return Ok(()) };
    if n == 0 {
        anyhow::bail!(UsageError("--jobs must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without parallel support; --jobs {n} ignored");
    Ok(())
}

fn replay(path: &std::path::Path) -> Result<()> {
    let manifest = RunManifest::read(path)?;
    if manifest.tool_version != env!("CARGO_PKG_VERSION") {
        log::warn!("manifest written by version {}", manifest.tool_version);
    }
    std::env::set_current_dir(&manifest.working_dir)
        .with_context(|| format!("entering {}", manifest.working_dir.display()))?;
    manifest.verify_inputs()?;
    let cli = parse(&manifest.argv).map_err(|e| UsageError(e.to_string()))?;
    if let Command::Replay(_) = cli.command {
        anyhow::bail!(UsageError("a manifest cannot replay another replay".into()));
    }
    commands::run(&cli.command, &manifest.argv)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = configure_pool(cli.jobs).and_then(|_| match &cli.command {
        Command::Replay(a) => replay(&a.manifest),
        cmd => commands::run(cmd, &argv),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
