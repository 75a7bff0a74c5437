//! Acceptance experiments, one verdict line per criterion.
//!
//! `SPLITMAX_WORKERS` sets the worker count of the Monte Carlo runs (default 1).

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use splitmax::analysis::{
    convergence_study, divergence_study, energy_study, subflow_energy_study, EnsembleSetup,
};
use splitmax::audit::{
    dense_propagator, run_audit, AuditSettings, CheckKind, FormKind, PropagatorKind,
    IE_SYMPLECTIC_FLOOR,
};
use splitmax::config::ExperimentConfig;
use splitmax::grid::{norm_l2, GridSpec};
use splitmax::harness::{cmd_convergence, coupled_setup, ORDER_BAND};
use splitmax::initial::Preset;
use splitmax::noise::{NoiseIncrement, NoiseSpec};
use splitmax::stepper::{one_step, SplitOrder, StepperConfig};
use splitmax::subflow::SchemeKind;
use splitmax::Result;

struct Verdict {
    passed: bool,
    detail: String,
    notes: Vec<String>,
}

impl Verdict {
    fn new(passed: bool, detail: String) -> Self {
        Verdict {
            passed,
            detail,
            notes: Vec::new(),
        }
    }
}

fn workers() -> usize {
    std::env::var("SPLITMAX_WORKERS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&w| w >= 1)
        .unwrap_or(1)
}

fn unit_noise() -> Result<NoiseSpec> {
    NoiseSpec::new([1.0; 3], [1.0; 3], 3.0, 4, splitmax::config::DEFAULT_SEED)
}

/// The default configuration is the order experiment.
fn order_config() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn exact_order(csv_one_worker: &mut Option<Vec<u8>>) -> Result<Verdict> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let (report, _) = cmd_convergence(&order_config(), dir.path(), 1)?;
    *csv_one_worker = fs::read(dir.path().join("convergence.csv")).ok();
    Ok(Verdict::new(
        report.passes(ORDER_BAND.0, ORDER_BAND.1),
        format!("exact p = {:.4}", report.order),
    ))
}

fn semi_discrete_order() -> Result<Verdict> {
    let setup = coupled_setup(&order_config(), workers())?;
    let reports = convergence_study(&setup, &[SchemeKind::ImplicitEuler, SchemeKind::Midpoint])?;
    let passed = reports.iter().all(|r| r.passes(ORDER_BAND.0, ORDER_BAND.1));
    let detail = reports
        .iter()
        .map(|r| format!("{} p = {:.4}", r.scheme, r.order))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Verdict::new(passed, detail))
}

fn energy_law() -> Result<Verdict> {
    let grid = GridSpec::cube(12)?;
    let z0 = Preset::SmoothBump.build(&grid)?;
    let noisy = EnsembleSetup {
        z0: z0.clone(),
        spec: unit_noise()?,
        horizon: 0.5,
        steps: 64,
        samples: 500,
        scheme: SchemeKind::Exact,
        order: SplitOrder::default(),
        workers: workers(),
    };
    let series = energy_study(&noisy)?;
    let bad = series.violations(4.0, 1e-12);
    let worst = (0..series.times.len())
        .filter(|&i| series.stderr[i] > 0.0)
        .map(|i| (series.mean[i] - series.predicted[i]).abs() / series.stderr[i])
        .fold(0.0, f64::max);

    let silent = EnsembleSetup {
        spec: NoiseSpec::silent(),
        steps: 1000,
        samples: 2,
        ..noisy
    };
    let flat = energy_study(&silent)?;
    let e0 = flat.predicted[0];
    let drift = flat
        .mean
        .iter()
        .map(|m| ((m - e0) / e0).abs())
        .fold(0.0, f64::max);
    Ok(Verdict::new(
        bad.is_empty() && drift <= 1e-9,
        format!(
            "{} of {} rows outside 4 stderr (worst {:.2} stderr); silent drift {:.2e} over 1000 steps",
            bad.len(),
            series.times.len(),
            worst,
            drift
        ),
    ))
}

fn subflow_energy_law() -> Result<Verdict> {
    let grid = GridSpec::cube(12)?;
    let z0 = Preset::SmoothBump.build(&grid)?;
    let spec = unit_noise()?;
    let mut passed = true;
    let mut parts = Vec::new();
    for j in 1..=3 {
        let s = subflow_energy_study(&z0, &spec, j, 0.1, 1000, workers())?;
        passed &= s.within(4.0);
        parts.push(format!(
            "j={j} gain {:.4e} vs {:.4e} ({:.2} stderr)",
            s.mean_gain,
            s.predicted_gain,
            (s.mean_gain - s.predicted_gain).abs() / s.stderr
        ));
    }
    Ok(Verdict::new(passed, parts.join(", ")))
}

fn structure_audit() -> Result<Verdict> {
    let report = run_audit(&GridSpec::cube(4)?, &AuditSettings::default())?;
    let mut failed: Vec<String> = report.failures().map(|l| l.to_string()).collect();
    // The implicit Euler line is informational in the report but must stay visibly non-symplectic.
    let implicit: Vec<_> = report
        .lines
        .iter()
        .filter(|l| l.kind == CheckKind::Symplectic(FormKind::Canonical) && l.tag.contains("S_IE"))
        .collect();
    failed.extend(
        implicit
            .iter()
            .filter(|l| l.defect < IE_SYMPLECTIC_FLOOR)
            .map(|l| format!("{l} (below {IE_SYMPLECTIC_FLOOR})")),
    );
    let mut v = Verdict::new(
        failed.is_empty() && implicit.len() == 3,
        format!(
            "{} checks, {} outside threshold",
            report.lines.len(),
            failed.len()
        ),
    );
    v.notes.extend(failed);
    v.notes.extend(
        report
            .lines
            .iter()
            .filter(|l| matches!(l.kind, CheckKind::Symplectic(FormKind::CurlWeighted(_))))
            .map(|l| l.to_string()),
    );
    Ok(v)
}

fn one_step_oracle() -> Result<Verdict> {
    let grid = GridSpec::cube(4)?;
    let z0 = Preset::SmoothBump.build(&grid)?;
    let spec = NoiseSpec::silent();
    let zero = NoiseIncrement::zero(grid, spec.modes);
    let mut defects = Vec::new();
    let mut tau = 0.02;
    for _ in 0..4 {
        let cfg = StepperConfig {
            scheme: SchemeKind::Exact,
            order: SplitOrder::default(),
            tau,
            steps: 1,
        };
        let mut diff = one_step(&z0, &cfg, &zero, &spec)?;
        let exact = dense_propagator(&grid, PropagatorKind::Exponential, None, tau)?.apply(&z0)?;
        diff.add_scaled(-1.0, &exact)?;
        defects.push(norm_l2(&diff));
        tau /= 2.0;
    }
    let ratios: Vec<f64> = defects.windows(2).map(|w| w[0] / w[1]).collect();
    let passed = ratios.iter().all(|r| (3.0..=5.0).contains(r));
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    Ok(Verdict::new(
        passed,
        format!("defect ratios per halving [{}]", shown.join(", ")),
    ))
}

fn divergence_law() -> Result<Verdict> {
    let grid = GridSpec::cube(16)?;
    let setup = EnsembleSetup {
        z0: Preset::SmoothBump.build(&grid)?,
        spec: NoiseSpec::silent(),
        horizon: 0.5,
        steps: 8,
        samples: 1,
        scheme: SchemeKind::Exact,
        order: SplitOrder::default(),
        workers: 1,
    };
    let series = divergence_study(&setup)?;
    let ratio = series.final_ratio();
    Ok(Verdict::new(
        ratio >= 1.7,
        format!("final residual ratio {ratio:.4} (tau = T/8 vs T/16)"),
    ))
}

fn determinism(csv_one_worker: &Option<Vec<u8>>) -> Result<Verdict> {
    let Some(one) = csv_one_worker else {
        return Ok(Verdict::new(false, "criterion 1 produced no CSV".into()));
    };
    let dir = tempfile::tempdir().expect("temporary directory");
    cmd_convergence(&order_config(), dir.path(), 8)?;
    let eight = fs::read(dir.path().join("convergence.csv")).map_err(|e| splitmax::Error::Io {
        path: dir.path().join("convergence.csv"),
        source: e,
    })?;
    Ok(Verdict::new(
        *one == eight,
        format!(
            "{} bytes with 1 worker, {} bytes with 8 workers",
            one.len(),
            eight.len()
        ),
    ))
}

fn main() -> ExitCode {
    let mut csv = None;
    let mut failures = 0;
    let mut report = |n: usize, name: &str, run: &mut dyn FnMut() -> Result<Verdict>| {
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(v) => {
                let tag = if v.passed { "PASS" } else { "FAIL" };
                println!("[{tag}] {n}. {name}: {} ({secs:.1}s)", v.detail);
                for note in &v.notes {
                    println!("         {note}");
                }
                failures += usize::from(!v.passed);
            }
            Err(e) => {
                println!("[FAIL] {n}. {name}: error: {e} ({secs:.1}s)");
                failures += 1;
            }
        }
    };
    report(1, "exact splitting order", &mut || exact_order(&mut csv));
    report(
        2,
        "implicit Euler and midpoint order",
        &mut semi_discrete_order,
    );
    report(3, "averaged energy law", &mut energy_law);
    report(4, "sub-flow energy law", &mut subflow_energy_law);
    report(5, "structure audit", &mut structure_audit);
    report(6, "one-step oracle", &mut one_step_oracle);
    report(7, "divergence law", &mut divergence_law);
    report(8, "determinism across workers", &mut || determinism(&csv));
    println!("acceptance: {} of 8 criteria failed", failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
