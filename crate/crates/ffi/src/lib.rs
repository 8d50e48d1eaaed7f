//! C ABI over the laboratory core.
//!
//! Exposes the critical-coefficient queries as plain functions over doubles
//! and wraps the explicit solver behind an opaque handle so other languages
//! can drive a run and read the front position. Every entry point returns an
//! [`FlStatus`]; values come back through out-pointers. Panics are caught at
//! the boundary and surfaced as [`FlStatus::Panic`] instead of unwinding
//! into foreign frames.
//!
//! The build script writes the matching header to `include/frontlab.h`.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use frontlab::front::front_position;
use frontlab::model::{a_crit, c_crit, tail_to_mass_coefficient, MassData, ModelParams, TailDirection};
use frontlab::profiles::{calibrate_plateau, make_profile, transform_to_w, uniform_grid};
use frontlab::solver::{cfl_dt, step, SolverState};
use frontlab::Error;

/// Result code for every ABI call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Arguments outside the model's domain (radii ordering, signs, ranges).
    InvalidArgument = 2,
    /// The request crossed the critical threshold the theory forbids.
    Threshold = 3,
    /// The request is self-consistent but cannot be satisfied (e.g. target
    /// mass below the tail mass).
    Infeasible = 4,
    /// The solver failed or exhausted its step budget.
    Numerical = 5,
    /// A panic was caught at the language boundary.
    Panic = 6,
}

/// Tail side selector for coefficient mapping.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlTailDirection {
    Shrink = 0,
    Expand = 1,
}

impl From<FlTailDirection> for TailDirection {
    fn from(d: FlTailDirection) -> Self {
        match d {
            FlTailDirection::Shrink => TailDirection::Shrink,
            FlTailDirection::Expand => TailDirection::Expand,
        }
    }
}

fn status_of(e: &Error) -> FlStatus {
    match e {
        Error::Threshold(_) => FlStatus::Threshold,
        Error::Infeasible(_) => FlStatus::Infeasible,
        Error::Numerical(_) | Error::Budget { .. } | Error::Internal(_) => FlStatus::Numerical,
        _ => FlStatus::InvalidArgument,
    }
}

/// Shields foreign callers from unwinding and funnels results into a status.
fn guarded(f: impl FnOnce() -> FlStatus) -> FlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => FlStatus::Panic,
    }
}

fn write_out(out: *mut f64, value: f64) -> FlStatus {
    if out.is_null() {
        return FlStatus::NullPointer;
    }
    unsafe { *out = value };
    FlStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    const VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string contains a NUL"),
    };
    VERSION.as_ptr()
}

/// Static human-readable name for a status code.
#[no_mangle]
pub extern "C" fn fl_status_name(status: FlStatus) -> *const c_char {
    let name: &CStr = match status {
        FlStatus::Ok => c"ok",
        FlStatus::NullPointer => c"null pointer",
        FlStatus::InvalidArgument => c"invalid argument",
        FlStatus::Threshold => c"threshold crossed",
        FlStatus::Infeasible => c"infeasible request",
        FlStatus::Numerical => c"numerical failure",
        FlStatus::Panic => c"panic at boundary",
    };
    name.as_ptr()
}

/// Critical density-tail coefficient for a borderline-exponent tail ending
/// at radius `r1`, at the mean density implied by `total_mass`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn fl_critical_tail_coefficient(
    n: u32,
    r_domain: f64,
    m: f64,
    total_mass: f64,
    r1: f64,
    out: *mut f64,
) -> FlStatus {
    guarded(|| {
        let result = (|| {
            let p = ModelParams::new(n, r_domain, m)?;
            let md = MassData::new(&p, total_mass)?;
            a_crit(&p, &md, r1)
        })();
        match result {
            Ok(v) => write_out(out, v),
            Err(e) => status_of(&e),
        }
    })
}

/// Critical mass-accumulation coefficient at radius `r1`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn fl_critical_mass_coefficient(
    n: u32,
    r_domain: f64,
    m: f64,
    total_mass: f64,
    r1: f64,
    out: *mut f64,
) -> FlStatus {
    guarded(|| {
        let result = (|| {
            let p = ModelParams::new(n, r_domain, m)?;
            let md = MassData::new(&p, total_mass)?;
            c_crit(&p, md.mu, r1)
        })();
        match result {
            Ok(v) => write_out(out, v),
            Err(e) => status_of(&e),
        }
    })
}

/// Maps a borderline density-tail coefficient on (r0, r1) to the matching
/// mass-accumulation bound coefficient.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn fl_tail_to_mass_coefficient(
    n: u32,
    r_domain: f64,
    m: f64,
    a: f64,
    r0: f64,
    r1: f64,
    direction: FlTailDirection,
    out: *mut f64,
) -> FlStatus {
    guarded(|| {
        let result = (|| {
            let p = ModelParams::new(n, r_domain, m)?;
            tail_to_mass_coefficient(&p, a, r0, r1, direction.into())
        })();
        match result {
            Ok(v) => write_out(out, v),
            Err(e) => status_of(&e),
        }
    })
}

/// Opaque simulation handle: one regularized run on a uniform grid.
pub struct FlSim {
    state: SolverState,
    safety: f64,
}

/// Builds a simulation from the plateau-ramp-tail profile family, with the
/// plateau height calibrated so the profile carries `total_mass`. The handle
/// must be released with [`fl_sim_free`].
///
/// # Safety
/// `out` must be a valid pointer to an `FlSim*` slot.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fl_sim_new(
    n: u32,
    r_domain: f64,
    m: f64,
    total_mass: f64,
    r_plateau: f64,
    r0: f64,
    r1: f64,
    alpha: f64,
    a: f64,
    grid_cells: usize,
    eps: f64,
    safety: f64,
    out: *mut *mut FlSim,
) -> FlStatus {
    guarded(|| {
        if out.is_null() {
            return FlStatus::NullPointer;
        }
        if !(safety > 0.0 && safety <= 1.0) || grid_cells < 2 {
            return FlStatus::InvalidArgument;
        }
        let built = (|| {
            let p = ModelParams::new(n, r_domain, m)?;
            let plateau = calibrate_plateau(&p, total_mass, a, alpha, r_plateau, r0, r1)?;
            let profile = make_profile(&p, plateau, r_plateau, a, alpha, r0, r1)?;
            let grid = uniform_grid(&p, grid_cells);
            let w0 = transform_to_w(&p, &profile, &grid);
            SolverState::new(&p, w0, eps, true)
        })();
        match built {
            Ok(state) => {
                unsafe { *out = Box::into_raw(Box::new(FlSim { state, safety })) };
                FlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Advances the simulation to `t_target` (no-op if already past it), taking
/// stability-limited explicit steps.
///
/// # Safety
/// `sim` must be a live handle from [`fl_sim_new`].
#[no_mangle]
pub unsafe extern "C" fn fl_sim_advance(sim: *mut FlSim, t_target: f64) -> FlStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_mut() }) else {
            return FlStatus::NullPointer;
        };
        if !t_target.is_finite() {
            return FlStatus::InvalidArgument;
        }
        const MAX_STEPS: u64 = 500_000_000;
        let mut taken = 0u64;
        while sim.state.t < t_target {
            let advance = (|| {
                let dt = cfl_dt(&sim.state, sim.safety)?.min(t_target - sim.state.t);
                step(&mut sim.state, dt)
            })();
            if let Err(e) = advance {
                return status_of(&e);
            }
            taken += 1;
            if taken > MAX_STEPS {
                return FlStatus::Numerical;
            }
        }
        FlStatus::Ok
    })
}

/// Current simulation time.
///
/// # Safety
/// `sim` must be a live handle; `out` a valid double pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_sim_time(sim: *const FlSim, out: *mut f64) -> FlStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return FlStatus::NullPointer;
        };
        write_out(out, sim.state.t)
    })
}

/// Front position in the mass-accumulation variable: the first s whose
/// saturation deficit is within `tau` of full.
///
/// # Safety
/// `sim` must be a live handle; `out` a valid double pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_sim_front_position(
    sim: *const FlSim,
    tau: f64,
    out: *mut f64,
) -> FlStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return FlStatus::NullPointer;
        };
        if !(tau > 0.0 && tau < 1.0) {
            return FlStatus::InvalidArgument;
        }
        write_out(out, front_position(&sim.state.grid, tau))
    })
}

/// Number of grid nodes, for sizing the buffers of [`fl_sim_copy_state`].
///
/// # Safety
/// `sim` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_sim_num_nodes(sim: *const FlSim, out: *mut usize) -> FlStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return FlStatus::NullPointer;
        };
        if out.is_null() {
            return FlStatus::NullPointer;
        }
        unsafe { *out = sim.state.grid.s.len() };
        FlStatus::Ok
    })
}

/// Copies the grid nodes and the current mass-accumulation values into the
/// caller's buffers. Either destination may be null to skip it.
///
/// # Safety
/// Non-null destinations must hold at least `len` doubles; `len` must equal
/// the node count reported by [`fl_sim_num_nodes`].
#[no_mangle]
pub unsafe extern "C" fn fl_sim_copy_state(
    sim: *const FlSim,
    s_out: *mut f64,
    w_out: *mut f64,
    len: usize,
) -> FlStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return FlStatus::NullPointer;
        };
        let nodes = sim.state.grid.s.len();
        if len != nodes {
            return FlStatus::InvalidArgument;
        }
        if !s_out.is_null() {
            unsafe { ptr::copy_nonoverlapping(sim.state.grid.s.as_ptr(), s_out, nodes) };
        }
        if !w_out.is_null() {
            unsafe { ptr::copy_nonoverlapping(sim.state.grid.values.as_ptr(), w_out, nodes) };
        }
        FlStatus::Ok
    })
}

/// Releases a handle. Null is accepted and ignored.
///
/// # Safety
/// `sim` must be null or a live handle from [`fl_sim_new`]; it must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_sim_free(sim: *mut FlSim) {
    if !sim.is_null() {
        drop(unsafe { Box::from_raw(sim) });
    }
}
