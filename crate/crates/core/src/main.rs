use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lsa_cran::report;
use lsa_cran::scenario::{parse_scenario, Scenario};
use lsa_cran::sim;
use lsa_cran::sweep;
use lsa_cran::units::Bps;

/// Scenario file could not be read, parsed or validated.
const EXIT_SCENARIO: u8 = 3;
/// Simulation, sweep or output failure.
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(name = "lsa-cran", version, about = "LSA spectrum sharing over a shared C-RAN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scenario's event timeline.
    Run {
        file: PathBuf,
        /// Per-event summary CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Protocol message trace.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Per-licensee allocation detail CSV.
        #[arg(long)]
        allocations: Option<PathBuf>,
    },
    /// Served licensees and revenue for 0..=N active incumbents.
    SweepIncumbents {
        file: PathBuf,
        /// Override every licensee's minimum rate (bps).
        #[arg(long)]
        min_rate: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Revenue over a log-spaced grid of spectrum-to-antenna cost ratios.
    SweepCostRatio {
        file: PathBuf,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario.
    Validate {
        file: PathBuf,
        /// Write the normalized scenario here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Scenario(anyhow::Error),
    Runtime(anyhow::Error),
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Scenario)?;
    parse_scenario(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(Failure::Scenario)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            file,
            out,
            log,
            allocations,
        } => {
            let scenario = load(&file)?;
            let result = sim::run(&scenario).context("simulation failed").map_err(Failure::Runtime)?;
            let write = || -> Result<()> {
                report::write_run_csv(output(out.as_deref())?, &result)?;
                if let Some(p) = log.as_deref() {
                    report::write_log(output(Some(p))?, &result.log)?;
                }
                if let Some(p) = allocations.as_deref() {
                    report::write_allocations_csv(output(Some(p))?, &result)?;
                }
                Ok(())
            };
            write().map_err(Failure::Runtime)
        }
        Command::SweepIncumbents { file, min_rate, out } => {
            let scenario = load(&file)?;
            let rows = sweep::sweep_incumbents(&scenario, min_rate.map(Bps));
            output(out.as_deref())
                .and_then(|w| Ok(report::write_incumbent_sweep_csv(w, &rows)?))
                .map_err(Failure::Runtime)
        }
        Command::SweepCostRatio {
            file,
            min,
            max,
            steps,
            out,
        } => {
            let scenario = load(&file)?;
            let rows = sweep::sweep_cost_ratio(&scenario, min, max, steps)
                .context("cost-ratio sweep")
                .map_err(Failure::Runtime)?;
            output(out.as_deref())
                .and_then(|w| Ok(report::write_cost_sweep_csv(w, &rows)?))
                .map_err(Failure::Runtime)
        }
        Command::Validate { file, out } => {
            let scenario = load(&file)?;
            match out {
                Some(p) => std::fs::write(&p, lsa_cran::scenario::emit_scenario(&scenario))
                    .with_context(|| format!("writing {}", p.display()))
                    .map_err(Failure::Runtime),
                None => {
                    eprintln!(
                        "{}: ok ({} channels, {} incumbents, {} licensees, {} events)",
                        file.display(),
                        scenario.band.channel_count(),
                        scenario.band.incumbents().len(),
                        scenario.mvnos.len(),
                        scenario.events.len()
                    );
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Scenario(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_SCENARIO)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
