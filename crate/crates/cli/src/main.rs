//! `terranav run` and `terranav replay`: a thin shell over the library's
//! scenario runner. Log verbosity comes from `TERRANAV_LOG`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use terranav::scenario::{replay, run_scenario, MetricsReport, RunResult, ScenarioConfig, ScenarioError};

const EXIT_CONFIG: u8 = 64;
const EXIT_OTHER: u8 = 1;

#[derive(Parser)]
#[command(name = "terranav", version, about = "Run and replay simulated off-road navigation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or every scenario in a directory with --batch).
    Run {
        #[arg(required_unless_present = "batch")]
        scenario: Option<PathBuf>,
        /// Artifact directory; batch runs get one subdirectory per scenario.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Dump all costmap tiers every K control ticks.
        #[arg(long, value_name = "K")]
        dump_costmaps: Option<u32>,
        /// Run every `*.json` scenario in this directory in parallel.
        #[arg(long, value_name = "DIR", conflicts_with = "scenario")]
        batch: Option<PathBuf>,
    },
    /// Re-derive the metrics report of a finished run from its logs.
    Replay { dir: PathBuf },
}

fn exit_for(err: &ScenarioError) -> u8 {
    match err {
        ScenarioError::Config { .. } => EXIT_CONFIG,
        _ => EXIT_OTHER,
    }
}

fn print_report(label: &str, m: &MetricsReport) {
    println!("{label}: {}", m.termination);
    for (row, value) in m.field_stats() {
        println!("  {row:<28} {value}");
    }
    println!("  {:<28} {}", "Collisions", m.collisions);
    println!("  {:<28} {}", "Hazard entries", m.hazard_entries);
    println!("  {:<28} {:.2} s", "Runtime", m.runtime);
}

fn run_one(path: &Path, out: &Path, seed: Option<u64>, dump: Option<u32>) -> Result<RunResult, ScenarioError> {
    let mut config = ScenarioConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(k) = dump {
        config.dump_costmaps = k;
    }
    run_scenario(&config, out)
}

fn report(label: &str, result: Result<RunResult, ScenarioError>) -> u8 {
    match result {
        Ok(r) => {
            print_report(label, &r.metrics);
            r.termination.exit_code() as u8
        }
        Err(e) => {
            eprintln!("{label}: {e}");
            exit_for(&e)
        }
    }
}

fn scenarios_in(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("TERRANAV_LOG")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario: Some(path), out, seed, dump_costmaps, batch: None } => {
            report(&path.display().to_string(), run_one(&path, &out, seed, dump_costmaps))
        }
        Command::Run { batch: Some(dir), out, seed, dump_costmaps, .. } => match scenarios_in(&dir) {
            Ok(files) => {
                let results: Vec<_> = std::thread::scope(|s| {
                    let handles: Vec<_> = files
                        .iter()
                        .map(|f| {
                            let target = out.join(f.file_stem().expect("file name"));
                            s.spawn(move || run_one(f, &target, seed, dump_costmaps))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
                });
                files
                    .iter()
                    .zip(results)
                    .map(|(f, r)| report(&f.display().to_string(), r))
                    .max()
                    .unwrap_or(0)
            }
            Err(e) => {
                eprintln!("{}: {e}", dir.display());
                EXIT_CONFIG
            }
        },
        Command::Run { .. } => unreachable!("clap requires a scenario or --batch"),
        Command::Replay { dir } => match replay(&dir) {
            Ok(m) => {
                print_report(&dir.display().to_string(), &m);
                0
            }
            Err(e) => {
                eprintln!("{}: {e}", dir.display());
                exit_for(&e)
            }
        },
    };
    ExitCode::from(code)
}
