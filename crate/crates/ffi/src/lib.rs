//! C ABI over the relay-friction library.
//!
//! Conventions:
//! - every fallible function returns an [`RfStatus`] and writes results
//!   through out-pointers, which are left untouched on failure;
//! - objects are opaque handles created by `rf_*_new`/`rf_integrate` and
//!   released by the matching `rf_*_free`;
//! - the message of the last failure on the calling thread is available
//!   from [`rf_last_error_message`];
//! - panics never cross the boundary; they are reported as
//!   [`RfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use relay_friction::cli::{parse_config, parse_config_with};
use relay_friction::friction::presliding_branch;
use relay_friction::harmonic::{solve_harmonic_balance, LinearPlant};
use relay_friction::lyapunov::{axis_start_bound, convergence_time_bound, twisting_bounds};
use relay_friction::{
    integrate, Error, EventKind, FrictionParams, PlantParams, Scenario, SystemState, Termination,
    Trajectory,
};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid argument, configuration or unmet precondition.
    InvalidArgument = 2,
    /// Integration, divergence or other numerical failure.
    Numerical = 3,
    /// The analysis could not reach a conclusion.
    Inconclusive = 4,
    /// Index past the end of a sequence.
    OutOfRange = 5,
    /// The requested value does not exist for this object.
    NotAvailable = 6,
    /// Internal panic caught at the boundary.
    Panic = 7,
}

/// Termination codes of a trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfTermination {
    TimeUp = 0,
    Converged = 1,
    StuckOffOrigin = 2,
}

/// Kinds of hybrid events.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfEventKind {
    RelaySwitch = 0,
    VelocityReversal = 1,
    StickEntry = 2,
    StickExit = 3,
    PreslidingToSliding = 4,
    SlidingToPresliding = 5,
}

/// One stored trajectory sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RfSample {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub u: f64,
    pub f: f64,
    pub z: f64,
}

/// One hybrid event, with the state just after the reset.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfEvent {
    pub t: f64,
    pub kind: RfEventKind,
    pub x1: f64,
    pub x2: f64,
    pub friction_before: f64,
    pub friction_after: f64,
}

/// Harmonic balance prediction.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RfChatter {
    /// Non-zero when a solution exists; `omega` and `a1` are NaN otherwise.
    pub exists: i32,
    pub omega: f64,
    pub a1: f64,
    pub phase_residual_min: f64,
}

/// Opaque simulation scenario.
pub struct RfScenario(Scenario);

/// Opaque simulated trajectory.
pub struct RfTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> RfStatus {
    match err.exit_code() {
        1 => RfStatus::InvalidArgument,
        3 => RfStatus::Inconclusive,
        _ => match err {
            Error::Domain(_) | Error::StabilityViolation(_) => RfStatus::InvalidArgument,
            _ => RfStatus::Numerical,
        },
    }
}

enum Fail {
    Null(&'static str),
    Range(String),
    Missing(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Run `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> RfStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => (RfStatus::Ok, String::new()),
        Ok(Err(Fail::Null(name))) => (
            RfStatus::NullPointer,
            format!("null pointer argument: {name}"),
        ),
        Ok(Err(Fail::Range(m))) => (RfStatus::OutOfRange, m),
        Ok(Err(Fail::Missing(m))) => (RfStatus::NotAvailable, m.to_string()),
        Ok(Err(Fail::Lib(e))) => (status_of(&e), e.to_string()),
        Err(p) => {
            let m = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            (RfStatus::Panic, format!("internal panic: {m}"))
        }
    };
    set_last_error(&msg);
    status
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail::Lib(Error::Input(format!("{name} is not UTF-8: {e}"))))
}

unsafe fn put<T>(out: *mut T, name: &'static str, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(name));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn rf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create a scenario for the closed loop with discontinuous Coulomb
/// friction, started at `(x1, x2)` and integrated up to `t_end`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn rf_scenario_new(
    k: f64,
    c: f64,
    c_f: f64,
    gamma: f64,
    x1: f64,
    x2: f64,
    t_end: f64,
    out: *mut *mut RfScenario,
) -> RfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let p = PlantParams::new(k, c, FrictionParams::discontinuous(c_f)?, gamma)?;
        let sc = Scenario::new(p, SystemState::new(x1, x2), t_end);
        sc.validate()?;
        put(out, "out", Box::into_raw(Box::new(RfScenario(sc))))
    })
}

/// Create a scenario from a registered preset name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_scenario_from_preset(
    name: *const c_char,
    out: *mut *mut RfScenario,
) -> RfStatus {
    guard(|| {
        let name = text(name, "name")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let sc = parse_config_with("", Some(name))?.scenario()?;
        put(out, "out", Box::into_raw(Box::new(RfScenario(sc))))
    })
}

/// Create a scenario from a TOML configuration document.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_scenario_from_config(
    config: *const c_char,
    out: *mut *mut RfScenario,
) -> RfStatus {
    guard(|| {
        let config = text(config, "config")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let cfg = parse_config(config)?;
        cfg.validate()?;
        put(
            out,
            "out",
            Box::into_raw(Box::new(RfScenario(cfg.scenario()?))),
        )
    })
}

/// Release a scenario. Null is ignored.
///
/// # Safety
/// `sc` must be null or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn rf_scenario_free(sc: *mut RfScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

fn update(sc: *mut RfScenario, f: impl FnOnce(&mut Scenario) -> Result<(), Error>) -> RfStatus {
    guard(|| {
        let sc = unsafe { deref_mut(sc, "scenario")? };
        let mut next = sc.0.clone();
        f(&mut next)?;
        next.validate()?;
        sc.0 = next;
        Ok(())
    })
}

/// Switch to the presliding friction model with stiffness `s`.
///
/// # Safety
/// `sc` must be a valid scenario handle.
#[no_mangle]
pub unsafe extern "C" fn rf_scenario_set_presliding(sc: *mut RfScenario, s: f64) -> RfStatus {
    update(sc, |x| {
        x.plant.friction = FrictionParams::presliding(x.plant.friction.c_f, s)?;
        Ok(())
    })
}

/// Add a first-order actuator lag with time constant `lag`.
///
/// # Safety
/// `sc` must be a valid scenario handle.
#[no_mangle]
pub unsafe extern "C" fn rf_scenario_set_actuator_lag(sc: *mut RfScenario, lag: f64) -> RfStatus {
    update(sc, |x| {
        x.plant = x.plant.with_actuator_lag(lag)?;
        Ok(())
    })
}

/// Set the step-size cap, s.
///
/// # Safety
/// `sc` must be a valid scenario handle.
#[no_mangle]
pub unsafe extern "C" fn rf_scenario_set_dt_max(sc: *mut RfScenario, dt_max: f64) -> RfStatus {
    update(sc, |x| {
        x.dt_max = dt_max;
        Ok(())
    })
}

/// Set the convergence radius; zero disables convergence termination.
///
/// # Safety
/// `sc` must be a valid scenario handle.
#[no_mangle]
pub unsafe extern "C" fn rf_scenario_set_convergence_radius(
    sc: *mut RfScenario,
    radius: f64,
) -> RfStatus {
    update(sc, |x| {
        x.convergence_radius = radius;
        Ok(())
    })
}

/// Integrate a scenario.
///
/// # Safety
/// `sc` must be a valid scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_integrate(
    sc: *const RfScenario,
    out: *mut *mut RfTrajectory,
) -> RfStatus {
    guard(|| {
        let sc = deref(sc, "scenario")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let tr = integrate(&sc.0)?;
        put(out, "out", Box::into_raw(Box::new(RfTrajectory(tr))))
    })
}

/// Release a trajectory. Null is ignored.
///
/// # Safety
/// `tr` must be null or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn rf_trajectory_free(tr: *mut RfTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Number of stored samples.
///
/// # Safety
/// `tr` must be a valid trajectory handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_trajectory_sample_count(
    tr: *const RfTrajectory,
    out: *mut usize,
) -> RfStatus {
    guard(|| put(out, "out", deref(tr, "trajectory")?.0.samples.len()))
}

/// Sample `index`.
///
/// # Safety
/// `tr` must be a valid trajectory handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_trajectory_sample(
    tr: *const RfTrajectory,
    index: usize,
    out: *mut RfSample,
) -> RfStatus {
    guard(|| {
        let tr = &deref(tr, "trajectory")?.0;
        let s = tr
            .samples
            .get(index)
            .ok_or_else(|| Fail::Range(format!("sample {index} of {}", tr.samples.len())))?;
        put(
            out,
            "out",
            RfSample {
                t: s.t,
                x1: s.x1,
                x2: s.x2,
                u: s.u,
                f: s.f,
                z: s.z,
            },
        )
    })
}

/// Number of hybrid events.
///
/// # Safety
/// `tr` must be a valid trajectory handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_trajectory_event_count(
    tr: *const RfTrajectory,
    out: *mut usize,
) -> RfStatus {
    guard(|| put(out, "out", deref(tr, "trajectory")?.0.events.len()))
}

/// Event `index`.
///
/// # Safety
/// `tr` must be a valid trajectory handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_trajectory_event(
    tr: *const RfTrajectory,
    index: usize,
    out: *mut RfEvent,
) -> RfStatus {
    guard(|| {
        let tr = &deref(tr, "trajectory")?.0;
        let e = tr
            .events
            .get(index)
            .ok_or_else(|| Fail::Range(format!("event {index} of {}", tr.events.len())))?;
        let kind = match e.kind {
            EventKind::RelaySwitch => RfEventKind::RelaySwitch,
            EventKind::VelocityReversal => RfEventKind::VelocityReversal,
            EventKind::StickEntry => RfEventKind::StickEntry,
            EventKind::StickExit => RfEventKind::StickExit,
            EventKind::PreslidingToSliding => RfEventKind::PreslidingToSliding,
            EventKind::SlidingToPresliding => RfEventKind::SlidingToPresliding,
        };
        put(
            out,
            "out",
            RfEvent {
                t: e.t,
                kind,
                x1: e.state_after.x1,
                x2: e.state_after.x2,
                friction_before: e.friction_before,
                friction_after: e.friction_after,
            },
        )
    })
}

/// How the run ended.
///
/// # Safety
/// `tr` must be a valid trajectory handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_trajectory_termination(
    tr: *const RfTrajectory,
    out: *mut RfTermination,
) -> RfStatus {
    guard(|| {
        let t = match deref(tr, "trajectory")?.0.termination {
            Termination::TimeUp => RfTermination::TimeUp,
            Termination::Converged => RfTermination::Converged,
            Termination::StuckOffOrigin => RfTermination::StuckOffOrigin,
        };
        put(out, "out", t)
    })
}

/// Time at which the convergence ball was reached; `NotAvailable` if the
/// run did not converge.
///
/// # Safety
/// `tr` must be a valid trajectory handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_trajectory_convergence_time(
    tr: *const RfTrajectory,
    out: *mut f64,
) -> RfStatus {
    guard(|| {
        let t = deref(tr, "trajectory")?
            .0
            .convergence_time
            .ok_or(Fail::Missing("the run did not converge"))?;
        put(out, "out", t)
    })
}

/// Closed-form convergence-time bound for a start at rest at `|x1|`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_axis_start_bound(
    gamma: f64,
    c_f: f64,
    x1_abs: f64,
    out: *mut f64,
) -> RfStatus {
    guard(|| {
        if !(gamma > c_f && c_f > 0.0 && x1_abs >= 0.0) {
            return Err(Error::Domain(format!(
                "need gamma > C_f > 0 and |x1| >= 0 (gamma = {gamma}, C_f = {c_f}, |x1| = {x1_abs})"
            ))
            .into());
        }
        put(out, "out", axis_start_bound(gamma, c_f, x1_abs))
    })
}

/// Convergence-time bound of the twisting loop with perturbation bound
/// `f_bound`, from `(x1, x2)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_convergence_time_bound(
    gamma: f64,
    c_f: f64,
    f_bound: f64,
    x1: f64,
    x2: f64,
    out: *mut f64,
) -> RfStatus {
    guard(|| {
        let b = twisting_bounds(gamma, c_f, f_bound)?;
        put(
            out,
            "out",
            convergence_time_bound(&SystemState::new(x1, x2), &b),
        )
    })
}

/// Presliding branch curve on `[-1, 1]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_presliding_branch(z: f64, out: *mut f64) -> RfStatus {
    guard(|| put(out, "out", presliding_branch(z)?))
}

/// Harmonic balance for the loop `1/(s² + c·s + k)` with an optional
/// actuator lag (`lag <= 0` means none).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_harmonic_balance(
    k: f64,
    c: f64,
    lag: f64,
    gamma: f64,
    c_f: f64,
    out: *mut RfChatter,
) -> RfStatus {
    guard(|| {
        let mut g = LinearPlant::second_order(k, c)?;
        if lag > 0.0 {
            g = g.with_actuator_lag(lag)?;
        }
        let sol = solve_harmonic_balance(&g, gamma, c_f)?;
        put(
            out,
            "out",
            RfChatter {
                exists: sol.exists as i32,
                omega: sol.omega_bar.unwrap_or(f64::NAN),
                a1: sol.a1.unwrap_or(f64::NAN),
                phase_residual_min: sol.phase_residual_min,
            },
        )
    })
}
