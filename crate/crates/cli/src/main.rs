use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gte_cli::report::Report;
use gte_cli::scenario::{run_scenario, Scenario};
use gte_cli::suites::{run_suite, Suite};

/// Exit codes: 0 every check passed, 1 a check failed or a run aborted,
/// 2 the input was unusable (bad config, unknown suite, missing report).
#[derive(Parser)]
#[command(name = "gte", version, about = "Transport of currents along flows: scenarios, suites and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write report.json, mass.csv and refinement.csv.
    Run {
        config: PathBuf,
        /// Run directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one seeded property suite and print its checks.
    Verify {
        suite: Suite,
        #[arg(long)]
        seed: u64,
    },
    /// Summarize a run directory and rewrite its CSV tables.
    Report { dir: PathBuf },
}

const FAILED: u8 = 1;
const UNUSABLE: u8 = 2;

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("CT_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("CT_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(UNUSABLE);
    }
    match cli.command {
        Command::Run { config, out } => {
            let scenario = match Scenario::load(&config) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(UNUSABLE);
                }
            };
            let dir = out.unwrap_or_else(|| scenario.output_dir());
            let report = match run_scenario(&scenario, |c| println!("{}", c.line())) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: run aborted: {e}");
                    return ExitCode::from(FAILED);
                }
            };
            if let Err(e) = report.write(&dir) {
                eprintln!("error: cannot write {}: {e}", dir.display());
                return ExitCode::from(FAILED);
            }
            println!("{} checks, {} failed; report in {}", report.checks.len(), report.failures(), dir.display());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(FAILED)
            }
        }
        Command::Verify { suite, seed } => match run_suite(suite, seed) {
            Ok(checks) => {
                for c in &checks {
                    println!("{}", c.line());
                }
                let failed = checks.iter().filter(|c| !c.pass).count();
                let samples: usize = checks.iter().map(|c| c.samples).sum();
                println!("{}: {} checks over {samples} samples, {failed} failed (seed {seed})", suite.name(), checks.len());
                if failed == 0 {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(FAILED)
                }
            }
            Err(e) => {
                eprintln!("error: {} suite aborted: {e}", suite.name());
                ExitCode::from(FAILED)
            }
        },
        Command::Report { dir } => {
            let report = match Report::read(&dir) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(UNUSABLE);
                }
            };
            if let Err(e) = report.write_tables(&dir) {
                eprintln!("error: cannot write tables: {e}");
                return ExitCode::from(FAILED);
            }
            print!("{}", report.table());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(FAILED)
            }
        }
    }
}
