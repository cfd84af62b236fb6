//! `uav-trust`: run, validate and list trust-monitoring scenarios.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 on runtime
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use uav_trust_harness::montecarlo::{run_monte_carlo, MonteCarloError};
use uav_trust_harness::output::emit_outputs;
use uav_trust_harness::scenario::{bundled_names, bundled_scenario, load_scenario, ScenarioSpec};

#[derive(Parser)]
#[command(
    name = "uav-trust",
    about = "UAV fleet trust-monitoring simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (bundled name or path to a scenario file).
    Run {
        scenario: String,
        /// Override the scenario's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of replications.
        #[arg(long)]
        reps: Option<usize>,
        /// Directory the output files are written to.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List the bundled scenarios.
    ListScenarios,
    /// Validate a scenario file without running it.
    Validate { file: PathBuf },
}

fn resolve_scenario(name_or_path: &str) -> Result<ScenarioSpec, String> {
    if let Some(bundled) = bundled_scenario(name_or_path) {
        return bundled.map_err(|e| e.to_string());
    }
    load_scenario(name_or_path).map_err(|e| e.to_string())
}

fn run(command: Command) -> ExitCode {
    match command {
        Command::Run {
            scenario,
            seed,
            reps,
            out,
        } => {
            let mut spec = match resolve_scenario(&scenario) {
                Ok(spec) => spec,
                Err(message) => {
                    eprintln!("error: {message}");
                    return ExitCode::from(1);
                }
            };
            if let Some(seed) = seed {
                spec.base_seed = seed;
            }
            if let Some(reps) = reps {
                spec.replications = reps;
            }
            if let Err(message) = spec.validate() {
                eprintln!("error: {message}");
                return ExitCode::from(1);
            }

            let run = match run_monte_carlo(&spec) {
                Ok(run) => run,
                Err(MonteCarloError::Scenario(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = emit_outputs(&spec, &run, &out) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }

            let report = &run.report;
            println!(
                "{}: {} replications, seed {}",
                report.scenario, report.replications, spec.base_seed
            );
            println!(
                "detection_rate={} false_alarm_rate={} environmental_accuracy={}",
                report.detection_rate, report.false_alarm_rate, report.environmental_accuracy
            );
            for uav in report.uav_ids() {
                println!(
                    "UAV {uav}: mean T_total {:.4} (T_task {:.4}, T_ene {:.4})",
                    report.mean_total_trust(uav),
                    report.mean_task_trust(uav),
                    report.mean_energy_trust(uav),
                );
            }
            println!("outputs written to {}", out.display());
            ExitCode::SUCCESS
        }
        Command::ListScenarios => {
            for name in bundled_names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { file } => match load_scenario(&file) {
            Ok(spec) => {
                println!("OK: {}", spec.name);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful exits; anything else
            // is a usage error.
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    run(cli.command)
}
