//! Monte Carlo statistics: mean-square errors against a coupled reference,
//! order fits, the averaged energy law and the divergence law.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{electric_divergence, energy, GridSpec, ScalarField, StateZ};
use crate::noise::trace_q;
use crate::noise::{
    grad_increment_field, increment_field, sample_lattice, BrownianLattice, ModeBasis,
    NoiseIncrement, NoiseSpec,
};
use crate::stepper::{Recording, SplitOrder, Stepper, StepperConfig, Trajectory};
use crate::subflow::{SchemeKind, SubflowPlan};

/// Smallest sample count accepted by the mean-square error estimators.
pub const MIN_ERROR_SAMPLES: usize = 8;

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Sample mean and standard error `sqrt(s²/M)` with the unbiased variance `s²`.
/// Sums are pairwise in index order, so the result depends only on the values.
pub fn mc_aggregate(values: &[f64]) -> Result<(f64, f64)> {
    let m = values.len();
    if m < 2 {
        return Err(Error::Statistics(format!(
            "need at least 2 samples, got {m}"
        )));
    }
    // Shifting by the first value keeps constant inputs exact.
    let shift = values[0];
    let centered: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let mean = shift + pairwise_sum(&centered) / m as f64;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (m - 1) as f64;
    Ok((mean, (var / m as f64).sqrt()))
}

/// [`mc_aggregate`] over `(sample index, value)` pairs arriving in any order.
pub fn mc_aggregate_indexed(values: &[(u64, f64)]) -> Result<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by_key(|&(i, _)| i);
    let xs: Vec<f64> = sorted.into_iter().map(|(_, v)| v).collect();
    mc_aggregate(&xs)
}

/// Least-squares slope of `log sqrt(ms_error)` against `log tau`, and the largest
/// absolute deviation from the fitted line.
pub fn fit_order(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 step sizes, got {}",
            points.len()
        )));
    }
    if let Some(&(t, e)) = points
        .iter()
        .find(|&&(t, e)| !(t > 0.0 && e > 0.0 && t.is_finite() && e.is_finite()))
    {
        return Err(Error::DegenerateFit(format!(
            "non-positive value in fit data (tau={t}, ms_error={e})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| 0.5 * p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all step sizes are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    let icpt = my - p * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - icpt - p * x).abs())
        .fold(0.0, f64::max);
    Ok((p, residual))
}

/// Runs `f` on sample ids `0..samples` with `workers` threads; results are in id order.
pub fn run_samples<T, F>(samples: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..samples as u64).into_par_iter().map(&f).collect())
}

fn steps_for(horizon: f64, tau: f64) -> Result<usize> {
    let ratio = horizon / tau;
    let steps = ratio.round();
    if !(steps >= 1.0 && (ratio - steps).abs() <= 1e-9 * steps) {
        return Err(Error::Config(format!(
            "step size {tau} does not divide the horizon {horizon}"
        )));
    }
    Ok(steps as usize)
}

fn distance_sq(a: &StateZ, b: &StateZ) -> Result<f64> {
    let mut d = a.clone();
    d.add_scaled(-1.0, b)?;
    Ok(energy(&d))
}

/// Shared inputs of a coupled-path error study.
#[derive(Clone, Debug)]
pub struct CoupledSetup {
    pub z0: StateZ,
    pub spec: NoiseSpec,
    pub horizon: f64,
    /// Strictly decreasing, each a dyadic multiple of `tau_ref`.
    pub taus: Vec<f64>,
    pub tau_ref: f64,
    pub samples: usize,
    pub order: SplitOrder,
    pub reference_scheme: SchemeKind,
    pub workers: usize,
}

impl CoupledSetup {
    pub fn grid(&self) -> &GridSpec {
        self.z0.grid()
    }

    /// Step counts of the ladder and of the reference.
    pub fn step_counts(&self) -> Result<(Vec<usize>, usize)> {
        if self.taus.is_empty() {
            return Err(Error::Config("empty step-size ladder".into()));
        }
        if self.taus.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "step sizes must be strictly decreasing".into(),
            ));
        }
        let n_ref = steps_for(self.horizon, self.tau_ref)?;
        let steps = self
            .taus
            .iter()
            .map(|&t| {
                let n = steps_for(self.horizon, t)?;
                if n_ref % n != 0 || !(n_ref / n).is_power_of_two() {
                    return Err(Error::Config(format!(
                        "reference step {} is not a dyadic refinement of {}",
                        self.tau_ref, t
                    )));
                }
                Ok(n)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((steps, n_ref))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergencePoint {
    pub tau: f64,
    /// `max_n E‖Z_ref(t_n) - Z(t_n)‖²`.
    pub ms_error: f64,
    /// Standard error of the sample mean at the maximizing time.
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub scheme: SchemeKind,
    pub points: Vec<ConvergencePoint>,
    /// Fitted order of `sqrt(ms_error)` in `tau`.
    pub order: f64,
    pub fit_residual: f64,
    pub samples: usize,
}

impl ConvergenceReport {
    pub fn passes(&self, lo: f64, hi: f64) -> bool {
        self.order >= lo && self.order <= hi
    }
}

/// Squared errors of every scheme and rung at every coarse step, for one sample.
#[allow(clippy::too_many_arguments)]
fn coupled_sample(
    setup: &CoupledSetup,
    schemes: &[SchemeKind],
    steps: &[usize],
    n_ref: usize,
    basis: &ModeBasis,
    reference: &Stepper,
    rungs: &[Vec<Stepper>],
    sample: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let spec = &setup.spec;
    let lattice = sample_lattice(spec, sample, setup.horizon, n_ref)?;
    let mut z_ref = setup.z0.clone();
    let mut states: Vec<Vec<StateZ>> = schemes
        .iter()
        .map(|_| steps.iter().map(|_| setup.z0.clone()).collect())
        .collect();
    let mut errs: Vec<Vec<Vec<f64>>> = schemes
        .iter()
        .map(|_| steps.iter().map(|&n| Vec::with_capacity(n)).collect())
        .collect();
    for m in 0..n_ref {
        let inc = increment_field(&lattice, basis, spec, n_ref, m)?;
        reference.step(&mut z_ref, &inc, spec)?;
        for (r, &n_r) in steps.iter().enumerate() {
            let q = n_ref / n_r;
            if (m + 1) % q != 0 {
                continue;
            }
            let inc = increment_field(&lattice, basis, spec, n_r, (m + 1) / q - 1)?;
            for s in 0..schemes.len() {
                rungs[s][r].step(&mut states[s][r], &inc, spec)?;
                errs[s][r].push(distance_sq(&z_ref, &states[s][r])?);
            }
        }
    }
    if !z_ref.is_finite() {
        return Err(Error::Numerical(format!(
            "reference path of sample {sample} diverged"
        )));
    }
    Ok(errs)
}

/// Mean-square errors of every rung of every scheme against the coupled reference.
/// All schemes share the reference run and the Brownian path of each sample.
pub fn coupled_errors(
    setup: &CoupledSetup,
    schemes: &[SchemeKind],
) -> Result<Vec<Vec<ConvergencePoint>>> {
    if setup.samples < MIN_ERROR_SAMPLES {
        return Err(Error::Statistics(format!(
            "mean-square error needs at least {} samples, got {}",
            MIN_ERROR_SAMPLES, setup.samples
        )));
    }
    let (steps, n_ref) = setup.step_counts()?;
    let grid = *setup.grid();
    let basis = ModeBasis::new(grid, setup.spec.modes)?;
    let reference = Stepper::from_plan(
        SubflowPlan::new(grid, setup.reference_scheme, setup.tau_ref)?,
        setup.order,
        n_ref,
    )?;
    let rungs = schemes
        .iter()
        .map(|&scheme| {
            setup
                .taus
                .iter()
                .zip(&steps)
                .map(|(&tau, &n)| {
                    Stepper::from_plan(SubflowPlan::new(grid, scheme, tau)?, setup.order, n)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let per_sample = run_samples(setup.samples, setup.workers, |id| {
        coupled_sample(
            setup, schemes, &steps, n_ref, &basis, &reference, &rungs, id,
        )
    })?;
    let mut out = Vec::with_capacity(schemes.len());
    for s in 0..schemes.len() {
        let mut points = Vec::with_capacity(steps.len());
        for (r, &n_r) in steps.iter().enumerate() {
            let mut best = (f64::NEG_INFINITY, 0.0);
            for n in 0..n_r {
                let column: Vec<f64> = per_sample.iter().map(|e| e[s][r][n]).collect();
                let (mean, se) = mc_aggregate(&column)?;
                if mean > best.0 {
                    best = (mean, se);
                }
            }
            points.push(ConvergencePoint {
                tau: setup.taus[r],
                ms_error: best.0,
                stderr: best.1,
            });
        }
        out.push(points);
    }
    Ok(out)
}

/// Convergence reports for several schemes from one coupled Monte Carlo run.
pub fn convergence_study(
    setup: &CoupledSetup,
    schemes: &[SchemeKind],
) -> Result<Vec<ConvergenceReport>> {
    let errors = coupled_errors(setup, schemes)?;
    schemes
        .iter()
        .zip(errors)
        .map(|(&scheme, points)| {
            let fit: Vec<(f64, f64)> = points.iter().map(|p| (p.tau, p.ms_error)).collect();
            let (order, fit_residual) = fit_order(&fit)?;
            Ok(ConvergenceReport {
                scheme,
                points,
                order,
                fit_residual,
                samples: setup.samples,
            })
        })
        .collect()
}

/// `(ms_error, stderr)` of one scheme at one step size against a reference at `tau_ref`.
pub fn ms_error(
    scheme: SchemeKind,
    tau: f64,
    tau_ref: f64,
    samples: usize,
    setup: &CoupledSetup,
) -> Result<(f64, f64)> {
    let single = CoupledSetup {
        taus: vec![tau],
        tau_ref,
        samples,
        ..setup.clone()
    };
    let p = &coupled_errors(&single, &[scheme])?[0][0];
    Ok((p.ms_error, p.stderr))
}

/// Inputs of the averaged-energy and divergence studies.
#[derive(Clone, Debug)]
pub struct EnsembleSetup {
    pub z0: StateZ,
    pub spec: NoiseSpec,
    pub horizon: f64,
    pub steps: usize,
    pub samples: usize,
    pub scheme: SchemeKind,
    pub order: SplitOrder,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `‖Z₀‖² + t |λ|² Tr(Q)`.
    pub predicted: Vec<f64>,
}

impl EnergySeries {
    /// Indices whose mean misses the prediction by more than
    /// `k * stderr + floor * |predicted|`.
    pub fn violations(&self, k: f64, floor: f64) -> Vec<usize> {
        (0..self.times.len())
            .filter(|&i| {
                (self.mean[i] - self.predicted[i]).abs()
                    > k * self.stderr[i] + floor * self.predicted[i].abs()
            })
            .collect()
    }
}

/// Monte Carlo estimate of `E‖Z(t_n)‖²` at every step.
pub fn energy_study(setup: &EnsembleSetup) -> Result<EnergySeries> {
    if setup.samples < 2 {
        return Err(Error::Statistics(format!(
            "energy study needs at least 2 samples, got {}",
            setup.samples
        )));
    }
    let grid = *setup.z0.grid();
    let cfg = StepperConfig::covering(setup.scheme, setup.order, setup.horizon, setup.steps)?;
    let stepper = Stepper::new(grid, cfg)?;
    let basis = ModeBasis::new(grid, setup.spec.modes)?;
    let per_sample = run_samples(setup.samples, setup.workers, |id| {
        let lattice = sample_lattice(&setup.spec, id, setup.horizon, setup.steps)?;
        Ok(stepper
            .run(
                &setup.z0,
                &lattice,
                &basis,
                &setup.spec,
                &Recording::energy(),
            )?
            .energies)
    })?;
    let e0 = energy(&setup.z0);
    let rate = setup.spec.lambda_norm_sq() * trace_q(&setup.spec);
    let mut series = EnergySeries {
        times: Vec::new(),
        mean: Vec::new(),
        stderr: Vec::new(),
        predicted: Vec::new(),
    };
    for n in 0..=setup.steps {
        let t = n as f64 * cfg.tau;
        let column: Vec<f64> = per_sample.iter().map(|e| e[n]).collect();
        let (mean, se) = mc_aggregate(&column)?;
        series.times.push(t);
        series.mean.push(mean);
        series.stderr.push(se);
        series.predicted.push(e0 + t * rate);
    }
    Ok(series)
}

/// Energy gain of a single sub-flow step against `τ |λ^[j]|² Tr(Q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubflowEnergy {
    pub j: usize,
    pub tau: f64,
    pub mean_gain: f64,
    pub stderr: f64,
    pub predicted_gain: f64,
}

impl SubflowEnergy {
    pub fn within(&self, k: f64) -> bool {
        (self.mean_gain - self.predicted_gain).abs() <= k * self.stderr
    }
}

pub fn subflow_energy_study(
    z0: &StateZ,
    spec: &NoiseSpec,
    j: usize,
    tau: f64,
    samples: usize,
    workers: usize,
) -> Result<SubflowEnergy> {
    let grid = *z0.grid();
    let plan = SubflowPlan::new(grid, SchemeKind::Exact, tau)?;
    let basis = ModeBasis::new(grid, spec.modes)?;
    let e0 = energy(z0);
    let gains = run_samples(samples, workers, |id| {
        let lattice = sample_lattice(spec, id, tau, 1)?;
        let inc = increment_field(&lattice, &basis, spec, 1, 0)?;
        let mut z = z0.clone();
        plan.sub_flow(&mut z, j, &inc, spec)?;
        Ok(energy(&z) - e0)
    })?;
    let (mean_gain, stderr) = mc_aggregate(&gains)?;
    let axis = crate::grid::Axis::from_index(j - 1)
        .ok_or_else(|| Error::Indexing(format!("subsystem {j}")))?;
    Ok(SubflowEnergy {
        j,
        tau,
        mean_gain,
        stderr,
        predicted_gain: tau * spec.split_lambda_norm_sq(axis) * trace_q(spec),
    })
}

/// `‖div E(t_n) - div E(0) - λ1·∇W(t_n)‖` at every snapshot of `trajectory`.
///
/// The trajectory must hold a snapshot at step 0 and come from `lattice`.
pub fn divergence_residual(
    trajectory: &Trajectory,
    spec: &NoiseSpec,
    lattice: &BrownianLattice,
    basis: &ModeBasis,
) -> Result<Vec<f64>> {
    if trajectory.seed != lattice.seed() || trajectory.sample_id != lattice.sample_id() {
        return Err(Error::Replay(format!(
            "trajectory was driven by (seed {}, sample {}), lattice is (seed {}, sample {})",
            trajectory.seed,
            trajectory.sample_id,
            lattice.seed(),
            lattice.sample_id()
        )));
    }
    let steps = trajectory.steps;
    lattice
        .level_for(steps)
        .map_err(|e| Error::Replay(e.to_string()))?;
    let first = trajectory
        .snapshots
        .first()
        .filter(|s| s.step == 0)
        .ok_or_else(|| Error::Replay("trajectory has no snapshot at t = 0".into()))?;
    let div0 = electric_divergence(&first.state)?;
    let q: Vec<f64> = spec.eigenvalues().iter().map(|q| q.sqrt()).collect();
    let mut w = vec![0.0; q.len()];
    let mut next = 0;
    let mut out = Vec::with_capacity(trajectory.snapshots.len());
    for snap in &trajectory.snapshots {
        while next < snap.step {
            for (wk, (db, sq)) in w
                .iter_mut()
                .zip(lattice.increments(steps, next)?.iter().zip(&q))
            {
                *wk += sq * db;
            }
            next += 1;
        }
        let mut r = electric_divergence(&snap.state)?;
        r.add_scaled(-1.0, &div0)?;
        let grad = grad_increment_field(
            &NoiseIncrement {
                coefficients: w.clone(),
                field: ScalarField::zeros(*basis.grid()),
            },
            basis,
        );
        for (d, g) in grad.iter().enumerate() {
            r.add_scaled(-spec.lambda1[d], g)?;
        }
        out.push(r.norm_l2());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceSeries {
    pub times: Vec<f64>,
    /// Sample-mean residual at `tau`.
    pub coarse: Vec<f64>,
    /// Sample-mean residual at `tau / 2`, at the same times.
    pub fine: Vec<f64>,
}

impl DivergenceSeries {
    pub fn final_ratio(&self) -> f64 {
        let (c, f) = (
            self.coarse.last().copied().unwrap_or(0.0),
            self.fine.last().copied().unwrap_or(0.0),
        );
        c / f
    }

    /// Largest coarse/fine ratio over rows with a nonzero fine residual.
    pub fn max_ratio(&self) -> f64 {
        self.coarse
            .iter()
            .zip(&self.fine)
            .filter(|(_, &f)| f > 0.0)
            .map(|(c, f)| c / f)
            .fold(f64::NAN, f64::max)
    }
}

type ResidualPair = (Vec<f64>, Vec<f64>);

/// Divergence residuals at `setup.steps` and `2 * setup.steps` steps on shared paths.
pub fn divergence_study(setup: &EnsembleSetup) -> Result<DivergenceSeries> {
    if setup.samples < 1 {
        return Err(Error::Statistics(
            "divergence study needs at least one sample".into(),
        ));
    }
    let grid = *setup.z0.grid();
    let basis = ModeBasis::new(grid, setup.spec.modes)?;
    let coarse_cfg =
        StepperConfig::covering(setup.scheme, setup.order, setup.horizon, setup.steps)?;
    let fine_cfg =
        StepperConfig::covering(setup.scheme, setup.order, setup.horizon, 2 * setup.steps)?;
    let coarse = Stepper::new(grid, coarse_cfg)?;
    let fine = Stepper::new(grid, fine_cfg)?;
    let per_sample = run_samples(setup.samples, setup.workers, |id| {
        let lattice = sample_lattice(&setup.spec, id, setup.horizon, 2 * setup.steps)?;
        let tc = coarse.run(
            &setup.z0,
            &lattice,
            &basis,
            &setup.spec,
            &Recording::snapshots(1),
        )?;
        let tf = fine.run(
            &setup.z0,
            &lattice,
            &basis,
            &setup.spec,
            &Recording::snapshots(2),
        )?;
        Ok((
            divergence_residual(&tc, &setup.spec, &lattice, &basis)?,
            divergence_residual(&tf, &setup.spec, &lattice, &basis)?,
        ))
    })?;
    let m = per_sample.len() as f64;
    let mean_of = |pick: &dyn Fn(&ResidualPair) -> f64| {
        let xs: Vec<f64> = per_sample.iter().map(pick).collect();
        pairwise_sum(&xs) / m
    };
    let mut series = DivergenceSeries {
        times: Vec::new(),
        coarse: Vec::new(),
        fine: Vec::new(),
    };
    for n in 0..=setup.steps {
        series.times.push(n as f64 * coarse_cfg.tau);
        series.coarse.push(mean_of(&|s| s.0[n]));
        series.fine.push(mean_of(&|s| s.1[n]));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Component, GridSpec};

    #[test]
    fn aggregate_examples() {
        let (m, s) = mc_aggregate(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(mc_aggregate(&[0.7; 9]).unwrap().1, 0.0);
        assert!(matches!(mc_aggregate(&[1.0]), Err(Error::Statistics(_))));
        let a = mc_aggregate_indexed(&[(2, 0.3), (0, 1.1), (1, -0.4), (3, 7.0)]).unwrap();
        let b = mc_aggregate_indexed(&[(3, 7.0), (1, -0.4), (0, 1.1), (2, 0.3)]).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn fit_examples() {
        let taus = [0.1, 0.05, 0.025, 0.0125];
        let lin: Vec<_> = taus.iter().map(|&t| (t, (3.0 * t) * (3.0 * t))).collect();
        let (p, r) = fit_order(&lin).unwrap();
        assert!((p - 1.0).abs() < 1e-12 && r < 1e-12);
        let quad: Vec<_> = taus.iter().map(|&t| (t, (t * t).powi(2))).collect();
        assert!((fit_order(&quad).unwrap().0 - 2.0).abs() < 1e-12);
        assert!(matches!(fit_order(&lin[..2]), Err(Error::DegenerateFit(_))));
        let mut zero = lin.clone();
        zero[1].1 = 0.0;
        assert!(matches!(fit_order(&zero), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn scheme_against_itself_has_zero_error() {
        let g = GridSpec::cube(4).unwrap();
        let mut z0 = StateZ::zeros(g);
        z0.set_field(
            Component::E1,
            &ScalarField::from_fn(g, |x, y, z| {
                (std::f64::consts::PI * x).cos() * y * (1.0 - y) * z * (1.0 - z)
            }),
        )
        .unwrap();
        z0.apply_pec();
        let setup = CoupledSetup {
            z0,
            spec: NoiseSpec::new([1.0; 3], [1.0; 3], 2.0, 2, 1).unwrap(),
            horizon: 0.25,
            taus: vec![0.125],
            tau_ref: 0.125,
            samples: 8,
            order: SplitOrder::default(),
            reference_scheme: SchemeKind::Midpoint,
            workers: 2,
        };
        let (ms, se) = ms_error(SchemeKind::Midpoint, 0.125, 0.125, 8, &setup).unwrap();
        assert_eq!((ms, se), (0.0, 0.0));
        assert!(matches!(
            ms_error(SchemeKind::Midpoint, 0.125, 0.125, 4, &setup),
            Err(Error::Statistics(_))
        ));
    }

    #[test]
    fn ladder_validation() {
        let g = GridSpec::cube(4).unwrap();
        let mut setup = CoupledSetup {
            z0: StateZ::zeros(g),
            spec: NoiseSpec::silent(),
            horizon: 1.0,
            taus: vec![0.5, 0.25],
            tau_ref: 0.0625,
            samples: 8,
            order: SplitOrder::default(),
            reference_scheme: SchemeKind::Exact,
            workers: 1,
        };
        assert_eq!(setup.step_counts().unwrap(), (vec![2, 4], 16));
        setup.taus = vec![0.25, 0.5];
        assert!(setup.step_counts().is_err());
        setup.taus = vec![1.0 / 3.0];
        assert!(setup.step_counts().is_err());
    }
}
