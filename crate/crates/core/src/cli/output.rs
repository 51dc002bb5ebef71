//! CSV and JSON writers. Floats are written with 17 significant digits so
//! that repeated runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::friction::Regime;
use crate::integrator::Trajectory;
use crate::plant::Motion;
use crate::tuning::GainSweepResult;
use crate::{Error, Result};

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn regime(r: Regime) -> &'static str {
    match r {
        Regime::Presliding => "presliding",
        Regime::Sliding => "sliding",
    }
}

fn motion(m: Motion) -> &'static str {
    match m {
        Motion::Moving => "moving",
        Motion::Stuck => "stuck",
    }
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,x1,x2,u,f,z,regime,motion\n");
    for s in &traj.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(s.t),
            num(s.x1),
            num(s.x2),
            num(s.u),
            num(s.f),
            num(s.z),
            regime(s.regime),
            motion(s.motion)
        );
    }
    out
}

pub fn events_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,kind,x1_before,x2_before,x1_after,x2_after,f_before,f_after\n");
    for e in &traj.events {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(e.t),
            e.kind.name(),
            num(e.state_before.x1),
            num(e.state_before.x2),
            num(e.state_after.x1),
            num(e.state_after.x2),
            num(e.friction_before),
            num(e.friction_after)
        );
    }
    out
}

pub fn sweep_csv(res: &GainSweepResult) -> String {
    let mut out = String::from("ratio,bound_T,sim_T,converged\n");
    let sim = res
        .sim_times
        .clone()
        .unwrap_or_else(|| vec![f64::NAN; res.grid.len()]);
    for (i, r) in res.grid.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(*r),
            num(res.bound_values[i]),
            num(sim[i]),
            sim[i].is_finite()
        );
    }
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents).map_err(Error::from)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    text.push('\n');
    write(dir, name, &text)
}

#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub kind: &'a str,
    pub message: String,
    pub exit_code: i32,
}

pub fn write_error(dir: &Path, err: &Error) -> Result<()> {
    write_json(
        dir,
        "error.json",
        &ErrorReport {
            kind: err.kind(),
            message: err.to_string(),
            exit_code: err.exit_code(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(f64::INFINITY), "inf");
        let back: f64 = num(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }
}
