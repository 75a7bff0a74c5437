use std::ffi::{CStr, CString};
use std::ptr;

use splitmax::config::ExperimentConfig;
use splitmax::noise::{sample_lattice, ModeBasis};
use splitmax::stepper::{Recording, Stepper, StepperConfig};
use splitmax_ffi::*;

const SMALL: &str = "[grid]\nintervals = [6, 6, 6]\n[time]\nhorizon = 0.25\ntaus = [0.0625]\n[noise]\nmodes = 2\nseed = 9\n";

fn new_sim(text: &str, sample: u64) -> *mut SmSim {
    let c = CString::new(text).unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { sm_sim_new(c.as_ptr(), sample, &mut sim) },
        SmStatus::Ok,
        "{}",
        last_error()
    );
    assert!(!sim.is_null());
    sim
}

fn last_error() -> String {
    unsafe {
        let n = sm_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as std::ffi::c_char; n + 1];
        assert_eq!(sm_last_error_message(buf.as_mut_ptr(), buf.len()), n);
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn state_of(sim: *const SmSim) -> Vec<f64> {
    let mut len = 0;
    unsafe {
        assert_eq!(sm_sim_state_len(sim, &mut len), SmStatus::Ok);
        let mut buf = vec![f64::NAN; len];
        assert_eq!(sm_sim_copy_state(sim, buf.as_mut_ptr(), len), SmStatus::Ok);
        buf
    }
}

#[test]
fn handle_matches_core_trajectory() {
    let sim = new_sim(SMALL, 3);
    let mut progress = (0, 0);
    unsafe {
        assert_eq!(
            sm_sim_progress(sim, &mut progress.0, &mut progress.1),
            SmStatus::Ok
        );
        assert_eq!(progress, (0, 4));
        assert_eq!(sm_sim_step(sim, 4), SmStatus::Ok);
        let mut t = 0.0;
        assert_eq!(sm_sim_time(sim, &mut t), SmStatus::Ok);
        assert_eq!(t, 0.25);
    }

    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let grid = cfg.grid_spec().unwrap();
    let spec = cfg.noise_spec().unwrap();
    let step_cfg = StepperConfig::covering(cfg.scheme.kind, cfg.scheme.order, 0.25, 4).unwrap();
    let traj = Stepper::new(grid, step_cfg)
        .unwrap()
        .run(
            &cfg.initial_state().unwrap(),
            &sample_lattice(&spec, 3, 0.25, 4).unwrap(),
            &ModeBasis::new(grid, spec.modes).unwrap(),
            &spec,
            &Recording::default(),
        )
        .unwrap();
    assert_eq!(state_of(sim), traj.final_state.as_slice());

    let mut e = 0.0;
    unsafe {
        assert_eq!(sm_sim_energy(sim, &mut e), SmStatus::Ok);
        assert_eq!(e, splitmax::grid::energy(&traj.final_state));
        assert_eq!(sm_sim_step(sim, 1), SmStatus::Finished);
        assert!(last_error().contains("4 steps"));
        sm_sim_free(sim);
    }
}

#[test]
fn silent_handle_conserves_energy() {
    let text = format!("{SMALL}lambda1 = [0.0, 0.0, 0.0]\nlambda2 = [0.0, 0.0, 0.0]\n");
    let sim = new_sim(&text, 0);
    let (mut e0, mut e1) = (0.0, 0.0);
    unsafe {
        sm_sim_energy(sim, &mut e0);
        assert_eq!(sm_sim_step(sim, 4), SmStatus::Ok);
        sm_sim_energy(sim, &mut e1);
        sm_sim_free(sim);
    }
    assert!(e0 > 0.0);
    assert!(((e1 - e0) / e0).abs() < 1e-12);
}

#[test]
fn errors_are_reported() {
    let mut sim = ptr::null_mut();
    let bad = CString::new("[grid]\nintervals = [2, 8, 8]").unwrap();
    unsafe {
        assert_eq!(sm_sim_new(bad.as_ptr(), 0, &mut sim), SmStatus::Config);
        assert!(sim.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(sm_sim_new(ptr::null(), 0, &mut sim), SmStatus::NullPointer);
        assert_eq!(
            sm_sim_new(bad.as_ptr(), 0, ptr::null_mut()),
            SmStatus::NullPointer
        );
        assert_eq!(sm_sim_step(ptr::null_mut(), 1), SmStatus::NullPointer);
        let mut x = 0.0;
        assert_eq!(sm_sim_energy(ptr::null(), &mut x), SmStatus::NullPointer);
        assert_eq!(sm_trace_q(-1.0, 4, &mut x), SmStatus::Config);
        sm_sim_free(ptr::null_mut());

        let sim = new_sim(SMALL, 0);
        let mut short = [0.0; 4];
        assert_eq!(
            sm_sim_copy_state(sim, short.as_mut_ptr(), short.len()),
            SmStatus::BufferTooSmall
        );
        assert_eq!(
            sm_sim_copy_state(sim, ptr::null_mut(), 0),
            SmStatus::NullPointer
        );
        sm_sim_free(sim);
    }
}

#[test]
fn trace_q_and_version() {
    let mut tr = 0.0;
    unsafe {
        assert_eq!(sm_trace_q(3.0, 4, &mut tr), SmStatus::Ok);
        let v = CStr::from_ptr(sm_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
    let spec = splitmax::noise::NoiseSpec::new([1.0; 3], [1.0; 3], 3.0, 4, 0).unwrap();
    assert_eq!(tr, splitmax::noise::trace_q(&spec));
}

#[test]
fn audit_rejects_degenerate_grid() {
    let (mut checks, mut failures) = (0, 0);
    unsafe {
        assert_ne!(sm_audit(1, &mut checks, &mut failures), SmStatus::Ok);
        assert_eq!(
            sm_audit(4, ptr::null_mut(), &mut failures),
            SmStatus::NullPointer
        );
    }
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/splitmax.h");
    for name in [
        "SmStatus sm_sim_new(",
        "void sm_sim_free(",
        "SmStatus sm_sim_step(",
        "SmStatus sm_sim_copy_state(",
        "SmStatus sm_audit(",
        "uintptr_t sm_last_error_message(",
        "typedef struct SmSim SmSim;",
        "SM_STATUS_BUFFER_TOO_SMALL = 5",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
