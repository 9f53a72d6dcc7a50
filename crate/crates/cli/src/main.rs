//! Command-line front end: run scenarios, sweep controllers, plot logs, and
//! validate configuration files.
//!
//! Exit codes: 0 success, 1 configuration error, 2 run failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use magnecko_cli::compare::compare_controllers;
use magnecko_cli::plots::emit_plots;
use magnecko_cli::runner::{read_csv, write_csv_file, RunError};
use magnecko_cli::scenario::{surface_frame, ControllerKind, EnvironmentKind, Scenario};
use magnecko_cli::transition::run_transition;

#[derive(Parser)]
#[command(name = "magnecko", about = "Magnetic climbing robot simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Mpc,
    Ik,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop scenario and write its log, metrics, and plots.
    Run {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (overrides the scenario's own).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Controller override.
        #[arg(long)]
        controller: Option<ControllerArg>,
    },
    /// Bisect the fastest stable speed per orientation for both controllers.
    Sweep {
        /// Output directory for the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run length per candidate speed, s.
        #[arg(long, default_value_t = 12.0)]
        duration: f64,
    },
    /// Re-plot an existing trajectory CSV.
    Plot {
        /// Scenario JSON the log was produced from.
        #[arg(long)]
        scenario: PathBuf,
        /// Trajectory CSV.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario file without running it.
    ValidateConfig {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Plan and replay the ground-to-wall transition of a corner scenario.
    Transition {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUN: u8 = 2;

fn load_scenario(
    path: &PathBuf,
    seed: Option<u64>,
    controller: Option<ControllerArg>,
    out: Option<PathBuf>,
) -> Result<Scenario, ExitCode> {
    let mut scenario = Scenario::from_file(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(controller) = controller {
        scenario.controller = match controller {
            ControllerArg::Mpc => ControllerKind::Mpc,
            ControllerArg::Ik => ControllerKind::DiffIk,
        };
    }
    if out.is_some() {
        scenario.out_dir = out;
    }
    Ok(scenario)
}

fn out_dir(scenario: &Scenario) -> PathBuf {
    scenario
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name))
}

fn run_failure(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_RUN)
}

fn io_failure(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_RUN)
}

fn cmd_run(scenario: Scenario) -> Result<(), ExitCode> {
    let dir = out_dir(&scenario);
    std::fs::create_dir_all(&dir).map_err(io_failure)?;
    if scenario.environment == EnvironmentKind::Corner {
        return cmd_transition(scenario);
    }
    // Write the log and metrics even when the run fails its health checks,
    // so failures can be inspected.
    let outcome = magnecko_cli::runner::run_scenario_outcome(&scenario).map_err(run_failure)?;
    write_csv_file(&outcome.rows, &dir.join("trajectory.csv")).map_err(io_failure)?;
    let metrics = serde_json::to_string_pretty(&outcome.metrics).map_err(io_failure)?;
    std::fs::write(dir.join("metrics.json"), metrics).map_err(io_failure)?;
    if let Some(t) = outcome.stats.divergence_at_s {
        return Err(run_failure(RunError::Divergence { time_s: t }));
    }
    if outcome.metrics.adhesion_failures() > 0 {
        let first = outcome
            .events
            .iter()
            .find(|e| {
                matches!(
                    e.kind,
                    magnecko_core::sim::SimEventKind::Slip
                        | magnecko_core::sim::SimEventKind::PullOff
                )
            })
            .map(|e| e.time_s)
            .unwrap_or(f64::NAN);
        return Err(run_failure(RunError::AdhesionFailure {
            count: outcome.metrics.adhesion_failures(),
            first_s: first,
        }));
    }
    let frame = surface_frame(scenario.environment, &scenario);
    let (model, _) = magnecko_cli::scenario::scenario_model();
    emit_plots(
        &outcome.rows,
        &scenario.environment(),
        &model,
        frame.travel,
        scenario.speed_m_s,
        &dir,
    )
    .map_err(io_failure)?;
    println!(
        "{}: mean speed {:.4} m/s, tracking rms {:.4} m, {} adhesion failures, max torque {:.2} N·m",
        scenario.name,
        outcome.metrics.mean_speed_m_s,
        outcome.metrics.tracking_rms_m,
        outcome.metrics.adhesion_failures(),
        outcome.metrics.max_torque_nm,
    );
    Ok(())
}

fn cmd_sweep(out: Option<PathBuf>, duration: f64) -> Result<(), ExitCode> {
    let environments = [
        EnvironmentKind::Ground,
        EnvironmentKind::Wall,
        EnvironmentKind::Ceiling,
    ];
    let report = compare_controllers(&environments, duration);
    for e in &report.entries {
        println!(
            "{:?} / {}: max stable speed {:.4} ± {:.4} m/s",
            e.environment, e.controller, e.max_stable_speed_m_s, e.resolution_m_s
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(io_failure)?;
        let text = serde_json::to_string_pretty(&report).map_err(io_failure)?;
        std::fs::write(dir.join("sweep.json"), text).map_err(io_failure)?;
    }
    Ok(())
}

fn cmd_plot(scenario: Scenario, log: PathBuf) -> Result<(), ExitCode> {
    let text = std::fs::read_to_string(&log).map_err(io_failure)?;
    let rows = read_csv(&text).map_err(run_failure)?;
    let dir = out_dir(&scenario);
    let frame = surface_frame(scenario.environment, &scenario);
    let (model, _) = magnecko_cli::scenario::scenario_model();
    let files = emit_plots(
        &rows,
        &scenario.environment(),
        &model,
        frame.travel,
        scenario.speed_m_s,
        &dir,
    )
    .map_err(io_failure)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_transition(scenario: Scenario) -> Result<(), ExitCode> {
    let report = run_transition(&scenario).map_err(io_failure)?;
    println!(
        "{}: {} steps over {:.1} s, min {} feet attached, wall normal error {:.2}°",
        scenario.name,
        report.steps,
        report.duration_s,
        report.min_attached,
        report.normal_error_rad.to_degrees(),
    );
    let dir = out_dir(&scenario);
    std::fs::create_dir_all(&dir).map_err(io_failure)?;
    let text = serde_json::to_string_pretty(&report).map_err(io_failure)?;
    std::fs::write(dir.join("transition.json"), text).map_err(io_failure)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            controller,
        } => load_scenario(&scenario, seed, controller, out).and_then(cmd_run),
        Command::Sweep { out, duration } => cmd_sweep(out, duration),
        Command::Plot { scenario, log, out } => {
            load_scenario(&scenario, None, None, out).and_then(|s| cmd_plot(s, log))
        }
        Command::ValidateConfig { scenario } => {
            load_scenario(&scenario, None, None, None).map(|s| {
                println!("{}: ok", s.name);
            })
        }
        Command::Transition { scenario, seed } => {
            load_scenario(&scenario, seed, None, None).and_then(cmd_transition)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
