use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ecocacc::output;
use ecocacc::scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "ecocacc",
    about = "Plan and simulate energy/mobility/comfort-balanced speed trajectories \
             for an electric-vehicle platoon on a signalized arterial"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectories.csv, summary.csv and platoon.csv
    Run {
        /// Scenario configuration file
        scenario: PathBuf,
        /// Output directory (created if absent)
        #[arg(long)]
        out: PathBuf,
        /// Grid resolution override, e.g. --grid-override t_step_s=0.25
        #[arg(long = "grid-override", value_name = "KEY=VALUE")]
        grid_override: Vec<String>,
    },
    /// Parse and validate a scenario file without running it
    Validate {
        scenario: PathBuf,
        /// Grid resolution override, applied before validation
        #[arg(long = "grid-override", value_name = "KEY=VALUE")]
        grid_override: Vec<String>,
    },
    /// Compare the platoon aggregates of two run directories
    Compare { run_dir_a: PathBuf, run_dir_b: PathBuf },
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, ecocacc::Error> {
    raw.iter()
        .map(|item| {
            item.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| {
                    ecocacc::Error::Validation(format!(
                        "grid override {item:?} is not of the form key=value"
                    ))
                })
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), ecocacc::Error> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            grid_override,
        } => {
            let overrides = parse_overrides(&grid_override)?;
            let result = ecocacc::run_scenario_file(&scenario, &out, &overrides)?;
            println!(
                "{} vehicles: avg energy {:.3} Wh/veh, avg travel time {:.3} s/veh",
                result.vehicles.len(),
                result.avg_energy_wh,
                result.avg_travel_time_s
            );
            for vehicle in &result.vehicles {
                let reason = vehicle.role.reason_label();
                println!(
                    "  vehicle {:>2} [{}] {}{}{}: {:.3} Wh, {:.2} s",
                    vehicle.vehicle_id,
                    vehicle.class_name,
                    vehicle.role.label(),
                    if reason.is_empty() { "" } else { " / " },
                    reason,
                    vehicle.energy_wh,
                    vehicle.travel_time_s
                );
            }
            println!("artifacts written to {}", out.display());
            Ok(())
        }
        Command::Validate {
            scenario,
            grid_override,
        } => {
            let overrides = parse_overrides(&grid_override)?;
            let mut loaded = Scenario::load(&scenario)?;
            for (key, value) in &overrides {
                loaded.apply_grid_override(key, value)?;
            }
            println!(
                "ok: {} m route, {} signals, {} vehicles ({} classes)",
                loaded.route.length_m,
                loaded.signals.len(),
                loaded.platoon.len(),
                loaded.classes.len()
            );
            Ok(())
        }
        Command::Compare {
            run_dir_a,
            run_dir_b,
        } => {
            let comparison = output::compare(&run_dir_a, &run_dir_b)?;
            print!("{}", comparison.table());
            let out_path = PathBuf::from("comparison.csv");
            std::fs::write(&out_path, comparison.csv())?;
            println!("written to {}", out_path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(inner) = source {
                eprintln!("  caused by: {inner}");
                source = inner.source();
            }
            ExitCode::from(err.exit_code())
        }
    }
}
