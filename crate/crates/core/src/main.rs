use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ibfsi::bench::{self, ScenarioConfig, StudyConfig};
use ibfsi::Error;

#[derive(Parser)]
#[command(name = "ibfsi", version, about = "Immersed-boundary FSI benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run { config: PathBuf },
    /// Run a grid / M_fac sweep and print the observed orders.
    Study { study: PathBuf },
    /// Quick self-checks.
    Verify,
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn run(config: PathBuf) -> Result<(), Error> {
    let cfg = ScenarioConfig::load(&config)?;
    let resolved = cfg.resolve()?;
    let dir = resolved.dir.clone();
    let out = bench::run(&resolved, Some(&dir))?;
    print!(
        "{}",
        toml::to_string(&out.summary).unwrap_or_default()
    );
    Ok(())
}

fn study(path: PathBuf) -> Result<(), Error> {
    let s = StudyConfig::load(&path)?;
    let exe = std::env::current_exe()?;
    let report = bench::run_study(&s, &exe)?;
    print!("{}", report.table());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::Study { study: s } => study(s),
        Command::Verify => {
            let checks = bench::verify::run_checks();
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                return ExitCode::from(3);
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
