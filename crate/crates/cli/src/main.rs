use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arisac::oracle::McConfig;
use arisac_cli::checks::{oracle_suite, OracleOptions};
use arisac_cli::run::write_log;
use arisac_cli::validate::validate;
use arisac_cli::{run, write_csv, ExperimentSpec, Status};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "arisac",
    version,
    about = "Active-RIS ISAC joint design experiments"
)]
struct Cli {
    /// First seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path (CSV for `run`, report for `validate` and `oracle`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweep points (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Exit non-zero if any point ends in a numerical failure (`run`) or any
    /// check fails (`oracle`).
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every sweep point and write the CSV plus a `.log` diagnostics file.
    Run { config: PathBuf },
    /// Check a config and the feasibility of its starting points.
    Validate { config: PathBuf },
    /// Compare solved points against Monte-Carlo, perturbation and grid oracles.
    Oracle {
        config: PathBuf,
        /// Monte-Carlo draws per estimate.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Random perturbations for the local-optimality certificate.
        #[arg(long, default_value_t = 1000)]
        perturbations: usize,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentSpec, String> {
    let mut spec = ExperimentSpec::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display()))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    }
}

fn execute(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run { config } => {
            let spec = load(&config, cli.seed)?;
            let rows = run(&spec, cli.jobs).map_err(|e| e.to_string())?;
            let target = cli.out.or_else(|| spec.output.clone());
            match &target {
                Some(p) => {
                    let f = File::create(p)
                        .map_err(|e| format!("cannot create {}: {e}", p.display()))?;
                    write_csv(&rows, BufWriter::new(f)).map_err(|e| e.to_string())?;
                    let log_path = p.with_extension("log");
                    let f = File::create(&log_path)
                        .map_err(|e| format!("cannot create {}: {e}", log_path.display()))?;
                    write_log(&rows, BufWriter::new(f)).map_err(|e| e.to_string())?;
                }
                None => write_csv(&rows, io::stdout().lock()).map_err(|e| e.to_string())?,
            }
            let failures = rows
                .iter()
                .filter(|r| r.status == Status::NumericalFailure)
                .count();
            if failures > 0 {
                log::warn!("{failures} point(s) ended in a numerical failure");
            }
            Ok(!(cli.strict && failures > 0))
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            let mut report = validate(&text).map_err(|e| format!("{}: {e}", config.display()))?;
            if let Some(s) = cli.seed {
                report.spec.seed = s;
            }
            emit(cli.out.as_deref(), &report.render())?;
            Ok(report.ok() || !cli.strict)
        }
        Command::Oracle {
            config,
            samples,
            perturbations,
        } => {
            let spec = load(&config, cli.seed)?;
            let opts = OracleOptions {
                mc: McConfig {
                    n_samples: samples,
                    ..McConfig::default()
                },
                n_perturb: perturbations,
                ..OracleOptions::default()
            };
            let report = oracle_suite(&spec, &opts).map_err(|e| e.to_string())?;
            emit(cli.out.as_deref(), &report.text)?;
            Ok(report.passed || !cli.strict)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
