//! Command-line front end: configuration, presets, file outputs and plots.

pub mod config;
pub mod output;
pub mod plot;
pub mod presets;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};
use serde_json::{json, Value};

use crate::analysis::{
    cycle_energy_balance, detect_limit_cycle, hysteresis_loop_energy, steady_state_error,
};
use crate::friction::FrictionModel;
use crate::harmonic::predict_chatter_and_validate;
use crate::integrator::{integrate, Trajectory};
use crate::lyapunov::{
    convergence_time_bound, default_exclusion_band, twisting_bounds, verify_decrease,
};
use crate::plant::invariant_set;
use crate::tuning::{bound_curve, empirical_gain_sweep, minimize_bound};
use crate::{Error, Result};

pub use config::{load_config, parse_config, parse_config_with, ScenarioConfig};
pub use plot::{emit_plot, PlotKind};

/// Environment variable holding the log filter (`error`, `info`, `debug`, ...).
pub const LOG_ENV: &str = "RELAY_FRICTION_LOG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate the closed loop and write the trajectory, events and report.
    Simulate,
    /// Simulated convergence time and analytic bound over a gain-ratio grid.
    SweepGain,
    /// Minimize the analytic convergence-time bound over the gain ratio.
    OptimalGain,
    /// Predict chattering by harmonic balance and compare with simulation.
    HarmonicBalance,
    /// Detect a limit cycle and check its energy balance.
    LimitCycle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::SweepGain => "sweep-gain",
            Command::OptimalGain => "optimal-gain",
            Command::HarmonicBalance => "harmonic-balance",
            Command::LimitCycle => "limit-cycle",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "relay-friction",
    version,
    about = "Relay friction compensation simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario document (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in scenario template; keys in --config override it.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
}

/// Parse arguments, run the command and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let cfg = match (&cli.config, &cli.preset) {
        (Some(path), preset) => load_config(path, preset.as_deref()),
        (None, Some(name)) => parse_config_with("", Some(name)),
        (None, None) => Err(Error::Config(
            "either --config or --preset is required".into(),
        )),
    };
    match cfg {
        Ok(mut cfg) => {
            cfg.outputs.plot |= cli.plot;
            run(cli.command, &cfg, &cli.out)
        }
        Err(e) => fail(&cli.out, e),
    }
}

fn fail(out: &Path, err: Error) -> i32 {
    eprintln!("error: {err}");
    if std::fs::create_dir_all(out).is_ok() {
        if let Err(e) = output::write_error(out, &err) {
            warn!("could not write error report: {e}");
        }
    }
    err.exit_code()
}

/// Run one command and write its artifacts into `out_dir`. Returns the exit
/// status; on failure an `error.json` report is written alongside.
pub fn run(command: Command, cfg: &ScenarioConfig, out_dir: &Path) -> i32 {
    let result = std::fs::create_dir_all(out_dir)
        .map_err(Error::from)
        .and_then(|_| {
            // A stale error report from an earlier run would be misleading.
            let stale = out_dir.join("error.json");
            if stale.exists() {
                std::fs::remove_file(stale)?;
            }
            Ok(())
        })
        .and_then(|_| dispatch(command, cfg, out_dir));
    match result {
        Ok(()) => {
            info!("{} finished", command.name());
            0
        }
        Err(e) => fail(out_dir, e),
    }
}

fn dispatch(command: Command, cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    match command {
        Command::Simulate => simulate(cfg, out),
        Command::SweepGain => sweep_gain(cfg, out),
        Command::OptimalGain => optimal_gain(cfg, out),
        Command::HarmonicBalance => harmonic_balance(cfg, out),
        Command::LimitCycle => limit_cycle(cfg, out),
    }
}

fn header(command: Command, cfg: &ScenarioConfig) -> Result<Value> {
    let sc = cfg.scenario()?;
    Ok(json!({
        "command": command.name(),
        "preset": cfg.preset,
        "reference": cfg.reference,
        "plant": sc.plant,
        "initial_state": sc.x0,
        "t_end": sc.t_end,
    }))
}

fn write_report(cfg: &ScenarioConfig, out: &Path, report: &Value) -> Result<()> {
    if cfg.outputs.report {
        output::write_json(out, "report.json", report)?;
    }
    Ok(())
}

fn write_trajectory(cfg: &ScenarioConfig, out: &Path, traj: &Trajectory) -> Result<()> {
    if cfg.outputs.trajectory_csv {
        output::write(out, "trajectory.csv", &output::trajectory_csv(traj))?;
    }
    if cfg.outputs.events_csv {
        output::write(out, "events.csv", &output::events_csv(traj))?;
    }
    if cfg.outputs.plot {
        for kind in PlotKind::ALL {
            emit_plot(traj, kind, &out.join(kind.file_name()))?;
        }
    }
    Ok(())
}

fn trajectory_summary(traj: &Trajectory) -> Value {
    let last = traj.last();
    let mut counts = serde_json::Map::new();
    for e in &traj.events {
        let slot = counts.entry(e.kind.name()).or_insert(json!(0));
        *slot = json!(slot.as_u64().unwrap_or(0) + 1);
    }
    json!({
        "termination": traj.termination.name(),
        "convergence_time": traj.convergence_time,
        "horizon": traj.horizon,
        "final_state": last.map(|s| json!({ "t": s.t, "x1": s.x1, "x2": s.x2, "u": s.u, "f": s.f })),
        "samples": traj.samples.len(),
        "event_counts": counts,
    })
}

fn simulate(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let sc = cfg.scenario()?;
    let traj = integrate(&sc)?;
    write_trajectory(cfg, out, &traj)?;

    let mut report = header(Command::Simulate, cfg)?;
    report["trajectory"] = trajectory_summary(&traj);
    // Error coordinates: the set-point is the origin.
    report["steady_state_error"] =
        match steady_state_error(&traj, 0.0, cfg.analysis.window_fraction) {
            Ok(s) => json!(s),
            Err(e) => json!({ "error": e.to_string() }),
        };
    if let Ok(band) = invariant_set(&sc.plant) {
        report["stiction_band"] = json!(band);
    }
    let p = &sc.plant;
    let twisting = p.k == 0.0
        && p.c == 0.0
        && p.actuator_lag.is_none()
        && p.friction.model == FrictionModel::Discontinuous
        && p.gamma > p.friction.c_f;
    if twisting {
        let b = twisting_bounds(p.gamma, p.friction.c_f, p.f_bound)?;
        let decrease = match verify_decrease(&traj, &b, default_exclusion_band(&traj)) {
            Ok(d) => json!(d),
            Err(e) => json!({ "error": e.to_string() }),
        };
        report["lyapunov"] = json!({
            "bounds": b,
            "convergence_time_bound": convergence_time_bound(&sc.x0, &b),
            "decrease": decrease,
        });
    }
    write_report(cfg, out, &report)
}

fn sweep_gain(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let sc = cfg.scenario()?;
    let grid = cfg.analysis.sweep.grid()?;
    let res = empirical_gain_sweep(&sc, &grid)?;
    output::write(out, "sweep.csv", &output::sweep_csv(&res))?;
    let mut report = header(Command::SweepGain, cfg)?;
    report["sweep"] = json!(res);
    write_report(cfg, out, &report)
}

fn optimal_gain(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let sc = cfg.scenario()?;
    let c_f = sc.plant.friction.c_f;
    let x1 = sc.x0.x1.abs();
    let sw = &cfg.analysis.sweep;
    let min = minimize_bound(c_f, x1, sw.lo, sw.hi)?;
    let curve = bound_curve(c_f, x1, &sw.grid()?)?;
    output::write(out, "sweep.csv", &output::sweep_csv(&curve))?;
    let mut report = header(Command::OptimalGain, cfg)?;
    report["minimize"] = json!(min);
    report["bound_curve"] = json!(curve);
    write_report(cfg, out, &report)
}

fn harmonic_balance(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let sc = cfg.scenario()?;
    let rep = predict_chatter_and_validate(&sc)?;
    let mut report = header(Command::HarmonicBalance, cfg)?;
    report["chatter"] = json!(rep);
    write_report(cfg, out, &report)
}

fn limit_cycle(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let sc = cfg.scenario()?;
    let traj = integrate(&sc)?;
    write_trajectory(cfg, out, &traj)?;
    let lc = detect_limit_cycle(&traj, cfg.analysis.rel_tol)?;
    let mut report = header(Command::LimitCycle, cfg)?;
    report["trajectory"] = trajectory_summary(&traj);
    if let (true, Some(cycle)) = (lc.detected, lc.final_cycle) {
        let bal = cycle_energy_balance(&traj, cycle)?;
        report["energy_balance"] = json!({
            "input": bal.input,
            "dissipated": bal.dissipated,
            "relative_mismatch": bal.relative_mismatch(),
        });
        report["hysteresis_loop_energy"] = match hysteresis_loop_energy(&traj, cycle) {
            Ok(e) => json!(e),
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    report["limit_cycle"] = json!(lc);
    write_report(cfg, out, &report)
}
