//! Drives the C entry points the way a foreign caller would: through raw
//! pointers and status codes.

use std::ffi::CStr;
use std::ptr;

use frontlab_ffi::*;

#[test]
fn critical_coefficients_match_the_worked_values() {
    let mut a = 0.0f64;
    let status = unsafe { fl_critical_tail_coefficient(1, 1.0, 2.0, 2.0, 0.5, &mut a) };
    assert_eq!(status, FlStatus::Ok);
    assert!((a - 0.5).abs() <= 1e-15);

    let mut c = 0.0f64;
    let status = unsafe { fl_critical_mass_coefficient(1, 1.0, 2.0, 2.0, 0.5, &mut c) };
    assert_eq!(status, FlStatus::Ok);
    assert!((c - 0.25).abs() <= 1e-15);

    // The tail map lands on the critical mass coefficient at r0 = r1.
    let mut mapped = 0.0f64;
    let status = unsafe {
        fl_tail_to_mass_coefficient(1, 1.0, 2.0, a, 0.5, 0.5, FlTailDirection::Shrink, &mut mapped)
    };
    assert_eq!(status, FlStatus::Ok);
    assert!((mapped - c).abs() <= 1e-12 * c);
}

#[test]
fn bad_arguments_map_to_statuses_not_crashes() {
    let mut v = 0.0f64;
    let status = unsafe { fl_critical_tail_coefficient(1, 1.0, 2.0, 2.0, 1.5, &mut v) };
    assert_eq!(status, FlStatus::InvalidArgument);

    let status = unsafe { fl_critical_tail_coefficient(1, 1.0, 2.0, 2.0, 0.5, ptr::null_mut()) };
    assert_eq!(status, FlStatus::NullPointer);

    let status = unsafe { fl_sim_advance(ptr::null_mut(), 1.0) };
    assert_eq!(status, FlStatus::NullPointer);

    let name = unsafe { CStr::from_ptr(fl_status_name(FlStatus::Threshold)) };
    assert_eq!(name.to_str().unwrap(), "threshold crossed");

    let version = unsafe { CStr::from_ptr(fl_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn infeasible_mass_is_reported() {
    let mut sim: *mut FlSim = ptr::null_mut();
    // Tail alone already carries more mass than requested.
    let status = unsafe {
        fl_sim_new(1, 1.0, 2.0, 1e-6, 0.3, 0.3, 0.5, 1.0, 1.0, 128, 1e-3, 0.4, &mut sim)
    };
    assert_eq!(status, FlStatus::Infeasible);
    assert!(sim.is_null());
}

#[test]
fn simulation_handle_runs_and_reports_a_moving_front() {
    let mut sim: *mut FlSim = ptr::null_mut();
    let status = unsafe {
        fl_sim_new(1, 1.0, 2.0, 2.0, 0.15, 0.15, 0.5, 1.0, 0.25, 256, 1e-3, 0.4, &mut sim)
    };
    assert_eq!(status, FlStatus::Ok);
    assert!(!sim.is_null());

    let mut nodes = 0usize;
    assert_eq!(unsafe { fl_sim_num_nodes(sim, &mut nodes) }, FlStatus::Ok);
    assert_eq!(nodes, 257);

    let mut before = 0.0f64;
    assert_eq!(
        unsafe { fl_sim_front_position(sim, 1e-4, &mut before) },
        FlStatus::Ok
    );

    assert_eq!(unsafe { fl_sim_advance(sim, 2e-3) }, FlStatus::Ok);
    let mut t = 0.0f64;
    assert_eq!(unsafe { fl_sim_time(sim, &mut t) }, FlStatus::Ok);
    assert!((t - 2e-3).abs() <= 1e-12);

    let mut after = 0.0f64;
    assert_eq!(
        unsafe { fl_sim_front_position(sim, 1e-4, &mut after) },
        FlStatus::Ok
    );
    // Subcritical tail: the saturation point pulls inward.
    assert!(after < before, "front moved {before} -> {after}");

    let mut s = vec![0.0f64; nodes];
    let mut w = vec![0.0f64; nodes];
    assert_eq!(
        unsafe { fl_sim_copy_state(sim, s.as_mut_ptr(), w.as_mut_ptr(), nodes) },
        FlStatus::Ok
    );
    assert_eq!(s[0], 0.0);
    assert!((s[nodes - 1] - 1.0).abs() <= 1e-12);
    assert!(w.windows(2).all(|p| p[1] >= p[0] - 1e-12));

    assert_eq!(
        unsafe { fl_sim_copy_state(sim, s.as_mut_ptr(), ptr::null_mut(), nodes - 1) },
        FlStatus::InvalidArgument
    );

    unsafe { fl_sim_free(sim) };
    unsafe { fl_sim_free(ptr::null_mut()) };
}
