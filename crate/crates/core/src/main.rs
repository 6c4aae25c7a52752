use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use nsch::commands;
use nsch::io::{parse_config, write_report, CheckResult, RunConfig};

#[derive(Parser)]
#[command(name = "nsch", version, about = "Navier-Stokes-Cahn-Hilliard simulator and verification harness")]
struct Cli {
    /// JSON-lines report path (defaults to <output.dir>/<command>.jsonl when a config is given).
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and check mass, separation and clamp events.
    Run { config: PathBuf },
    /// dt- and eps-refinement studies with ratio tables.
    Convergence {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        halvings: usize,
    },
    /// Run with comparison-envelope tracking and report every sample.
    Envelope { config: PathBuf },
    /// Property suite (potential, Korteweg identity, spectral oracle, ODE identity, ...).
    Verify { config: Option<PathBuf> },
    /// FFT operators against the dense N = 8 oracle.
    OracleCheck,
}

fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    for w in &cfg.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(Vec<CheckResult>, Option<PathBuf>)> {
    let default_report = |cfg: &RunConfig, name: &str| cfg.output_dir.join(format!("{name}.jsonl"));
    Ok(match &cli.command {
        Command::Run { config } => {
            let cfg = load(config)?;
            (commands::run_command(&cfg)?, Some(default_report(&cfg, "run")))
        }
        Command::Convergence { config, halvings } => {
            let cfg = load(config)?;
            let (tables, results) = commands::convergence_command(&cfg, *halvings)?;
            print!("{tables}");
            (results, Some(default_report(&cfg, "convergence")))
        }
        Command::Envelope { config } => {
            let cfg = load(config)?;
            (commands::envelope_command(&cfg)?, Some(default_report(&cfg, "envelope")))
        }
        Command::Verify { config } => match config {
            Some(path) => {
                let cfg = load(path)?;
                (commands::verify_command(&cfg)?, Some(default_report(&cfg, "verify")))
            }
            None => (commands::verify_command(&parse_config(commands::DEFAULT_CONFIG)?)?, None),
        },
        Command::OracleCheck => (commands::oracle_check_command()?, None),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let (results, default_path) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed", results.len(), failed);
    if let Some(path) = cli.report.clone().or(default_path) {
        if let Err(e) = write_report(&path, &results) {
            eprintln!("error: writing report {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
