//! C ABI for the splitmax solver.
//!
//! A simulation handle owns one sample path: it is built from the text of an
//! experiment configuration and advances by the first step of its ladder up to
//! the configured horizon. Every entry point returns an [`SmStatus`]; after a
//! failure [`sm_last_error_message`] holds the diagnostic for the calling thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use splitmax::audit::{run_audit, AuditSettings};
use splitmax::config::ExperimentConfig;
use splitmax::grid::{energy, GridSpec, StateZ};
use splitmax::noise::{
    increment_field, sample_lattice, trace_q, BrownianLattice, ModeBasis, NoiseSpec,
};
use splitmax::stepper::{Stepper, StepperConfig};
use splitmax::Error;

#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Finished = 6,
    Panic = 7,
    Internal = 8,
}

/// Opaque simulation handle.
pub struct SmSim {
    stepper: Stepper,
    spec: NoiseSpec,
    basis: ModeBasis,
    lattice: BrownianLattice,
    state: StateZ,
    taken: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> SmStatus {
    match err {
        Error::Config(_) | Error::Stencil(_) | Error::Unsupported(_) => SmStatus::Config,
        Error::Numerical(_) => SmStatus::Numerical,
        Error::Dimension(_) | Error::Indexing(_) | Error::BoundaryConsistency(_) => {
            SmStatus::InvalidArgument
        }
        _ => SmStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SmStatus, String)>) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SmStatus::Panic
        }
    }
}

fn lift<T>(r: splitmax::Result<T>) -> Result<T, (SmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SmStatus, String) {
    (SmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn sim_ref<'a>(sim: *const SmSim) -> Result<&'a SmSim, (SmStatus, String)> {
    sim.as_ref().ok_or_else(|| null("simulation handle"))
}

fn build(config: &str, sample_id: u64) -> splitmax::Result<SmSim> {
    let cfg = ExperimentConfig::from_toml(config)?;
    let grid = cfg.grid_spec()?;
    let spec = cfg.noise_spec()?;
    let steps = (cfg.time.horizon / cfg.time.taus[0]).round() as usize;
    let step_cfg =
        StepperConfig::covering(cfg.scheme.kind, cfg.scheme.order, cfg.time.horizon, steps)?;
    Ok(SmSim {
        stepper: Stepper::new(grid, step_cfg)?,
        basis: ModeBasis::new(grid, spec.modes)?,
        lattice: sample_lattice(&spec, sample_id, cfg.time.horizon, steps)?,
        state: cfg.initial_state()?,
        spec,
        taken: 0,
    })
}

/// Creates a simulation of sample `sample_id` from configuration text.
///
/// An empty string selects the default configuration.
#[no_mangle]
pub unsafe extern "C" fn sm_sim_new(
    config_toml: *const c_char,
    sample_id: u64,
    out: *mut *mut SmSim,
) -> SmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = ptr::null_mut();
        if config_toml.is_null() {
            return Err(null("configuration text"));
        }
        let text = CStr::from_ptr(config_toml).to_str().map_err(|e| {
            (
                SmStatus::InvalidArgument,
                format!("configuration is not UTF-8: {e}"),
            )
        })?;
        let sim = lift(build(text, sample_id))?;
        *out = Box::into_raw(Box::new(sim));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sm_sim_free(sim: *mut SmSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances `count` steps; stops with `Finished` at the horizon.
#[no_mangle]
pub unsafe extern "C" fn sm_sim_step(sim: *mut SmSim, count: u32) -> SmStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("simulation handle"))?;
        let total = sim.stepper.config().steps;
        for _ in 0..count {
            if sim.taken == total {
                return Err((
                    SmStatus::Finished,
                    format!("all {total} steps already taken"),
                ));
            }
            let inc = lift(increment_field(
                &sim.lattice,
                &sim.basis,
                &sim.spec,
                total,
                sim.taken,
            ))?;
            lift(sim.stepper.step(&mut sim.state, &inc, &sim.spec))?;
            if !sim.state.is_finite() {
                return Err((
                    SmStatus::Numerical,
                    format!("non-finite state after step {}", sim.taken + 1),
                ));
            }
            sim.taken += 1;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sm_sim_time(sim: *const SmSim, out: *mut f64) -> SmStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = sim.taken as f64 * sim.stepper.config().tau;
        Ok(())
    })
}

/// Steps taken and steps available.
#[no_mangle]
pub unsafe extern "C" fn sm_sim_progress(
    sim: *const SmSim,
    taken: *mut u64,
    total: *mut u64,
) -> SmStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        if taken.is_null() || total.is_null() {
            return Err(null("output pointer"));
        }
        *taken = sim.taken as u64;
        *total = sim.stepper.config().steps as u64;
        Ok(())
    })
}

/// Discrete energy `‖Z‖²` of the current state.
#[no_mangle]
pub unsafe extern "C" fn sm_sim_energy(sim: *const SmSim, out: *mut f64) -> SmStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = energy(&sim.state);
        Ok(())
    })
}

/// Number of doubles in the state: six components on every node.
#[no_mangle]
pub unsafe extern "C" fn sm_sim_state_len(sim: *const SmSim, out: *mut usize) -> SmStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = sim.state.as_slice().len();
        Ok(())
    })
}

/// Copies the state, component-major `E1 E2 E3 H1 H2 H3`, into `buf`.
#[no_mangle]
pub unsafe extern "C" fn sm_sim_copy_state(
    sim: *const SmSim,
    buf: *mut f64,
    len: usize,
) -> SmStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        let data = sim.state.as_slice();
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len < data.len() {
            return Err((
                SmStatus::BufferTooSmall,
                format!("state holds {} values, buffer {}", data.len(), len),
            ));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// `Tr(Q)` of the truncated covariance with `modes` modes per axis.
#[no_mangle]
pub unsafe extern "C" fn sm_trace_q(decay_r: f64, modes: u32, out: *mut f64) -> SmStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let spec = lift(NoiseSpec::new(
            [1.0; 3],
            [1.0; 3],
            decay_r,
            modes as usize,
            0,
        ))?;
        *out = trace_q(&spec);
        Ok(())
    })
}

/// Runs the structure audit on the unit cube with `intervals` per axis and
/// reports the number of checks and of failed checks.
#[no_mangle]
pub unsafe extern "C" fn sm_audit(
    intervals: u32,
    checks: *mut u32,
    failures: *mut u32,
) -> SmStatus {
    guard(|| {
        if checks.is_null() || failures.is_null() {
            return Err(null("output pointer"));
        }
        let grid = lift(GridSpec::cube(intervals as usize))?;
        let report = lift(run_audit(&grid, &AuditSettings::default()))?;
        *checks = report.lines.len() as u32;
        *failures = report.failures().count() as u32;
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL-terminated, into `buf`
/// and returns its length without the terminator; 0 when there is none.
///
/// With a null or short buffer nothing is written and the required length is
/// still returned.
#[no_mangle]
pub unsafe extern "C" fn sm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len >= bytes.len() {
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
        }
        bytes.len() - 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
