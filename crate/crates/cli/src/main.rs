#![allow(clippy::result_large_err)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mlab_cli::commands::{factorize, verify};
use mlab_cli::error::CliError;
use mlab_cli::run::{run, write_atomic};
use mlab_cli::scenario::{load_value, Settings};
use mlab_cli::sweep::{sweep, SweepSpec};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "mlab",
    version,
    about = "Resolution and decoherence analysis of quantum measurement interactions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for randomized readouts and factorization restarts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Residual tolerance for nonnegative factorizations.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory (run) or file (sweep, verify, factorize).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses listed in a scenario file.
    Run { scenario: PathBuf },
    /// Rerun a scenario over a list of parameter values; writes CSV.
    Sweep { scenario: PathBuf, sweep: PathBuf },
    /// Randomized check of the resolution bound and analysis invariants.
    Verify { config: Option<PathBuf> },
    /// Nonnegative factorization of a Gram matrix.
    Factorize { gram: PathBuf },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::validation(format!("MLAB_THREADS={raw:?} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::analysis(e.to_string()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, quiet: bool) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    match out {
        Some(path) => write_atomic(path, &text),
        None => {
            if !quiet {
                print!("{text}");
            }
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    if let Some(tol) = cli.tol {
        if tol.is_nan() || tol <= 0.0 {
            return Err(CliError::validation(format!(
                "--tol {tol} must be positive"
            )));
        }
    }
    let defaults = Settings::default();
    let settings = Settings {
        seed: cli.seed.unwrap_or(defaults.seed),
        tol: cli.tol.unwrap_or(defaults.tol),
    };
    match &cli.command {
        Command::Run { scenario } => {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("mlab-out"));
            let outputs = run(scenario, &dir, &settings)?;
            if !cli.quiet {
                println!(
                    "wrote {} file(s) to {}",
                    outputs.manifest.files.len() + 1,
                    dir.display()
                );
                if let Some(s) = &outputs.steering {
                    for p in &s.pairs {
                        println!(
                            "steering {:?}: R[{}] = {:.10} D_irr[{}] = {:.10} violation = {}",
                            p.pair, s.r, p.resolution_r, s.c, p.irreversible_c, p.violation
                        );
                    }
                }
            }
            Ok(())
        }
        Command::Sweep {
            scenario,
            sweep: spec,
        } => {
            let doc = load_value(scenario)?;
            let spec: SweepSpec = mlab_cli::scenario::load_json(spec)?;
            let csv = sweep(&doc, &spec, &settings)?;
            match &cli.out {
                Some(path) => write_atomic(path, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::Verify { config } => {
            let report = verify(config.as_deref(), cli.seed)?;
            emit(&report, cli.out.as_deref(), cli.quiet)
        }
        Command::Factorize { gram } => {
            let report = factorize(gram, &settings)?;
            emit(&report, cli.out.as_deref(), cli.quiet)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::validation(e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code as u8)
        }
    }
}
