use std::ffi::{CStr, CString};
use std::ptr;

use relay_friction_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rf_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn twisting(x1: f64) -> *mut RfScenario {
    let mut sc = ptr::null_mut();
    let st = unsafe { rf_scenario_new(0.0, 0.0, 1.0, 2.0, x1, 0.0, 20.0, &mut sc) };
    assert_eq!(st, RfStatus::Ok, "{}", last_error());
    assert!(!sc.is_null());
    sc
}

#[test]
fn twisting_run_matches_closed_form_time() {
    let sc = twisting(1.0);
    let mut tr = ptr::null_mut();
    unsafe {
        assert_eq!(rf_integrate(sc, &mut tr), RfStatus::Ok);
        let mut term = RfTermination::TimeUp;
        assert_eq!(rf_trajectory_termination(tr, &mut term), RfStatus::Ok);
        assert_eq!(term, RfTermination::Converged);

        // Starting at rest on the axis, V(x0) = bound / r² is the exact time
        // to the origin; the run stops earlier, at the 1e-6 ball.
        let mut bound = 0.0;
        assert_eq!(rf_axis_start_bound(2.0, 1.0, 1.0, &mut bound), RfStatus::Ok);
        let r2 = 1.0 / 3.0;
        let mut t = 0.0;
        assert_eq!(rf_trajectory_convergence_time(tr, &mut t), RfStatus::Ok);
        let exact = bound / r2;
        assert!(t < exact && exact - t < 1e-2, "{t} vs {exact}");

        let mut n = 0usize;
        assert_eq!(rf_trajectory_sample_count(tr, &mut n), RfStatus::Ok);
        assert!(n > 10);
        let mut first = RfSample::default();
        assert_eq!(rf_trajectory_sample(tr, 0, &mut first), RfStatus::Ok);
        assert_eq!((first.t, first.x1, first.x2), (0.0, 1.0, 0.0));
        assert_eq!(
            rf_trajectory_sample(tr, n, &mut first),
            RfStatus::OutOfRange
        );

        let mut m = 0usize;
        assert_eq!(rf_trajectory_event_count(tr, &mut m), RfStatus::Ok);
        let mut ev = std::mem::MaybeUninit::<RfEvent>::uninit();
        assert_eq!(rf_trajectory_event(tr, 0, ev.as_mut_ptr()), RfStatus::Ok);
        assert_eq!(ev.assume_init().kind, RfEventKind::RelaySwitch);

        rf_trajectory_free(tr);
        rf_scenario_free(sc);
    }
}

#[test]
fn invalid_arguments_are_reported() {
    let mut sc = ptr::null_mut();
    unsafe {
        let st = rf_scenario_new(0.0, 0.0, -1.0, 2.0, 1.0, 0.0, 1.0, &mut sc);
        assert_eq!(st, RfStatus::InvalidArgument);
        assert!(sc.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(
            rf_scenario_new(0.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, ptr::null_mut()),
            RfStatus::NullPointer
        );
        assert_eq!(
            rf_integrate(ptr::null(), &mut ptr::null_mut()),
            RfStatus::NullPointer
        );

        let mut v = 0.0;
        assert_eq!(rf_presliding_branch(1.5, &mut v), RfStatus::InvalidArgument);
        assert_eq!(rf_presliding_branch(0.5, &mut v), RfStatus::Ok);
        assert!(last_error().is_empty());
        assert!((v - 0.5 * (1.0 - 0.5f64.ln())).abs() < 1e-15);
        assert_eq!(
            rf_axis_start_bound(0.5, 1.0, 1.0, &mut v),
            RfStatus::InvalidArgument
        );
    }
}

#[test]
fn setters_validate_and_keep_previous_state() {
    let sc = twisting(1.0);
    unsafe {
        assert_eq!(rf_scenario_set_dt_max(sc, -1.0), RfStatus::InvalidArgument);
        assert_eq!(rf_scenario_set_dt_max(sc, 1e-3), RfStatus::Ok);
        assert_eq!(
            rf_scenario_set_presliding(sc, 0.0),
            RfStatus::InvalidArgument
        );
        assert_eq!(rf_scenario_set_convergence_radius(sc, 0.0), RfStatus::Ok);
        assert_eq!(rf_scenario_set_actuator_lag(sc, 0.05), RfStatus::Ok);

        let mut tr = ptr::null_mut();
        assert_eq!(rf_integrate(sc, &mut tr), RfStatus::Ok);
        let mut term = RfTermination::Converged;
        assert_eq!(rf_trajectory_termination(tr, &mut term), RfStatus::Ok);
        assert_eq!(term, RfTermination::TimeUp);
        let mut t = 0.0;
        assert_eq!(
            rf_trajectory_convergence_time(tr, &mut t),
            RfStatus::NotAvailable
        );
        rf_trajectory_free(tr);
        rf_scenario_free(sc);
    }
}

#[test]
fn presets_and_configs_load() {
    let mut sc = ptr::null_mut();
    unsafe {
        let name = CString::new("lab-2mm").unwrap();
        assert_eq!(
            rf_scenario_from_preset(name.as_ptr(), &mut sc),
            RfStatus::Ok
        );
        let mut tr = ptr::null_mut();
        assert_eq!(rf_integrate(sc, &mut tr), RfStatus::Ok);
        let mut term = RfTermination::TimeUp;
        rf_trajectory_termination(tr, &mut term);
        assert_eq!(term, RfTermination::StuckOffOrigin);
        rf_trajectory_free(tr);
        rf_scenario_free(sc);

        let bad = CString::new("lab-1m").unwrap();
        sc = ptr::null_mut();
        assert_eq!(
            rf_scenario_from_preset(bad.as_ptr(), &mut sc),
            RfStatus::InvalidArgument
        );
        assert!(sc.is_null());

        let doc = CString::new("preset = \"twisting-baseline\"\n[plant]\ngamma = 3.0\n").unwrap();
        assert_eq!(rf_scenario_from_config(doc.as_ptr(), &mut sc), RfStatus::Ok);
        rf_scenario_free(sc);
        rf_scenario_free(ptr::null_mut());
    }
}

#[test]
fn harmonic_balance_through_the_abi() {
    let mut out = RfChatter::default();
    unsafe {
        assert_eq!(
            rf_harmonic_balance(0.0, 0.0, 0.05, 1.5, 1.0, &mut out),
            RfStatus::Ok
        );
        assert_eq!(out.exists, 1);
        assert!((out.omega - 1.0 / (1.5 * 0.05)).abs() < 1e-8 * out.omega);

        assert_eq!(
            rf_harmonic_balance(5600.0, 150.0, 0.0, 1.214, 1.148, &mut out),
            RfStatus::Ok
        );
        assert_eq!(out.exists, 0);
        assert!(out.omega.is_nan());

        let mut v = 0.0;
        assert_eq!(
            rf_convergence_time_bound(0.5, 1.0, 0.0, 1.0, 0.0, &mut v),
            RfStatus::InvalidArgument
        );
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(rf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
