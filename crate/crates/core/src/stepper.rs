//! One-step splitting maps and whole trajectories.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{energy, GridSpec, StateZ};
use crate::noise::{increment_field, BrownianLattice, ModeBasis, NoiseIncrement, NoiseSpec};
use crate::subflow::{SchemeKind, SubflowPlan};

/// Order in which the three subsystems are advanced within a step.
/// `[1, 2, 3]` means `Ψ^[3] ∘ Ψ^[2] ∘ Ψ^[1]`: subsystem 1 first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SplitOrder([usize; 3]);

impl SplitOrder {
    pub fn new(stages: [usize; 3]) -> Result<Self> {
        let mut seen = [false; 3];
        for &s in &stages {
            if !(1..=3).contains(&s) || seen[s - 1] {
                return Err(Error::Config(format!(
                    "split order {stages:?} is not a permutation of (1, 2, 3)"
                )));
            }
            seen[s - 1] = true;
        }
        Ok(SplitOrder(stages))
    }

    pub fn stages(&self) -> [usize; 3] {
        self.0
    }

    pub fn all() -> [SplitOrder; 6] {
        [
            [1, 2, 3],
            [1, 3, 2],
            [2, 1, 3],
            [2, 3, 1],
            [3, 1, 2],
            [3, 2, 1],
        ]
        .map(SplitOrder)
    }
}

impl Default for SplitOrder {
    fn default() -> Self {
        SplitOrder([1, 2, 3])
    }
}

impl fmt::Display for SplitOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for SplitOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits: Vec<usize> = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '(' | ')' | '[' | ']'))
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::Config(format!("bad split order '{s}'")))
            })
            .collect::<Result<_>>()?;
        let stages: [usize; 3] = digits
            .try_into()
            .map_err(|_| Error::Config(format!("split order '{s}' needs three stages")))?;
        SplitOrder::new(stages)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub scheme: SchemeKind,
    pub order: SplitOrder,
    pub tau: f64,
    pub steps: usize,
}

impl StepperConfig {
    /// Uniform steps covering `[0, horizon]`.
    pub fn covering(
        scheme: SchemeKind,
        order: SplitOrder,
        horizon: f64,
        steps: usize,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("at least one step is required".into()));
        }
        let cfg = StepperConfig {
            scheme,
            order,
            tau: horizon / steps as f64,
            steps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Config(format!(
                "step size must be positive, got {}",
                self.tau
            )));
        }
        if self.steps == 0 {
            return Err(Error::Config("at least one step is required".into()));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.tau * self.steps as f64
    }
}

/// A stepper bound to one grid, scheme, order and step size.
#[derive(Debug)]
pub struct Stepper {
    plan: SubflowPlan,
    config: StepperConfig,
}

impl Stepper {
    pub fn new(grid: GridSpec, config: StepperConfig) -> Result<Self> {
        config.validate()?;
        Ok(Stepper {
            plan: SubflowPlan::new(grid, config.scheme, config.tau)?,
            config,
        })
    }

    pub fn from_plan(plan: SubflowPlan, order: SplitOrder, steps: usize) -> Result<Self> {
        let config = StepperConfig {
            scheme: plan.scheme(),
            order,
            tau: plan.tau(),
            steps,
        };
        config.validate()?;
        Ok(Stepper { plan, config })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    pub fn grid(&self) -> &GridSpec {
        self.plan.grid()
    }

    /// Advances `state` by one step driven by `increment`.
    pub fn step(
        &self,
        state: &mut StateZ,
        increment: &NoiseIncrement,
        spec: &NoiseSpec,
    ) -> Result<()> {
        for j in self.config.order.stages() {
            self.plan.sub_flow(state, j, increment, spec)?;
        }
        Ok(())
    }

    /// Runs `config.steps` steps from `z0` on the path stored in `lattice`.
    pub fn run(
        &self,
        z0: &StateZ,
        lattice: &BrownianLattice,
        basis: &ModeBasis,
        spec: &NoiseSpec,
        recording: &Recording,
    ) -> Result<Trajectory> {
        let steps = self.config.steps;
        check_lattice(lattice, &self.config)?;
        let mut state = z0.clone();
        let mut traj = Trajectory {
            tau: self.config.tau,
            steps,
            seed: lattice.seed(),
            sample_id: lattice.sample_id(),
            energies: Vec::new(),
            snapshots: Vec::new(),
            final_state: StateZ::zeros(*z0.grid()),
        };
        traj.record(0, &state, recording);
        for n in 0..steps {
            let inc = increment_field(lattice, basis, spec, steps, n)?;
            self.step(&mut state, &inc, spec)?;
            if !state.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite state after step {}",
                    n + 1
                )));
            }
            traj.record(n + 1, &state, recording);
        }
        traj.final_state = state;
        Ok(traj)
    }
}

fn check_lattice(lattice: &BrownianLattice, cfg: &StepperConfig) -> Result<()> {
    lattice.level_for(cfg.steps)?;
    let horizon = cfg.horizon();
    if (lattice.horizon() - horizon).abs() > 1e-12 * horizon.abs().max(lattice.horizon().abs()) {
        return Err(Error::Config(format!(
            "lattice covers [0, {}] but the stepper covers [0, {}]",
            lattice.horizon(),
            horizon
        )));
    }
    Ok(())
}

/// Which diagnostics a trajectory keeps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Recording {
    /// Record `‖Z_n‖²` at every step.
    pub energy: bool,
    /// Keep the state at every multiple of this step count (including step 0).
    pub snapshot_every: Option<usize>,
}

impl Recording {
    pub fn energy() -> Self {
        Recording {
            energy: true,
            snapshot_every: None,
        }
    }

    pub fn snapshots(every: usize) -> Self {
        Recording {
            energy: false,
            snapshot_every: Some(every.max(1)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub state: StateZ,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub tau: f64,
    pub steps: usize,
    /// Identity of the Brownian path that drove the run.
    pub seed: u64,
    pub sample_id: u64,
    /// `‖Z_n‖²` for `n = 0..=steps`, if requested.
    pub energies: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: StateZ,
}

impl Trajectory {
    fn record(&mut self, n: usize, state: &StateZ, recording: &Recording) {
        if recording.energy {
            self.energies.push(energy(state));
        }
        if let Some(every) = recording.snapshot_every {
            if n.is_multiple_of(every) {
                self.snapshots.push(Snapshot {
                    step: n,
                    time: n as f64 * self.tau,
                    state: state.clone(),
                });
            }
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| n as f64 * self.tau).collect()
    }
}

/// One step of the composed splitting map.
pub fn one_step(
    state: &StateZ,
    cfg: &StepperConfig,
    increment: &NoiseIncrement,
    spec: &NoiseSpec,
) -> Result<StateZ> {
    let stepper = Stepper::new(*state.grid(), *cfg)?;
    let mut out = state.clone();
    stepper.step(&mut out, increment, spec)?;
    Ok(out)
}

/// Integrates `cfg.steps` steps from `z0`, recording the energy at every step.
pub fn run_trajectory(
    z0: &StateZ,
    cfg: &StepperConfig,
    lattice: &BrownianLattice,
    spec: &NoiseSpec,
) -> Result<Trajectory> {
    run_trajectory_with(z0, cfg, lattice, spec, &Recording::energy())
}

pub fn run_trajectory_with(
    z0: &StateZ,
    cfg: &StepperConfig,
    lattice: &BrownianLattice,
    spec: &NoiseSpec,
    recording: &Recording,
) -> Result<Trajectory> {
    let stepper = Stepper::new(*z0.grid(), *cfg)?;
    let basis = ModeBasis::new(*z0.grid(), spec.modes)?;
    stepper.run(z0, lattice, &basis, spec, recording)
}
