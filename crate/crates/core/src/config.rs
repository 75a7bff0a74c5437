//! Experiment configuration files.
//!
//! A configuration is a TOML document; every key is optional and defaults to
//! the mean-square convergence experiment on the unit cube:
//!
//! ```toml
//! [domain]
//! lower = [0.0, 0.0, 0.0]
//! upper = [1.0, 1.0, 1.0]
//!
//! [grid]
//! intervals = [16, 16, 16]
//!
//! [time]
//! horizon = 0.5
//! taus = [0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625]
//! # tau_ref = 0.0009765625
//!
//! [scheme]
//! kind = "exact"
//! order = "1,2,3"
//!
//! [noise]
//! lambda1 = [1.0, 1.0, 1.0]
//! lambda2 = [1.0, 1.0, 1.0]
//! decay_r = 3.0
//! modes = 4
//! seed = 20240611
//!
//! [run]
//! samples = 64
//! initial = "smooth-bump"
//! output_dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Cuboid, GridSpec};
use crate::initial::Preset;
use crate::noise::NoiseSpec;
use crate::stepper::SplitOrder;
use crate::subflow::SchemeKind;

pub const DEFAULT_SEED: u64 = 20240611;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            lower: [0.0; 3],
            upper: [1.0; 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub intervals: [usize; 3],
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { intervals: [16; 3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub horizon: f64,
    pub taus: Vec<f64>,
    /// Defaults to a quarter of the smallest ladder step.
    pub tau_ref: Option<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        let horizon = 0.5;
        TimeSection {
            horizon,
            taus: (3..=7).map(|k| horizon / f64::from(1u32 << k)).collect(),
            tau_ref: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    #[serde(with = "order_string")]
    pub order: SplitOrder,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            kind: SchemeKind::Exact,
            order: SplitOrder::default(),
        }
    }
}

mod order_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::stepper::SplitOrder;

    pub fn serialize<S: Serializer>(order: &SplitOrder, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&order.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SplitOrder, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub lambda1: [f64; 3],
    pub lambda2: [f64; 3],
    pub decay_r: f64,
    pub modes: usize,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            lambda1: [1.0; 3],
            lambda2: [1.0; 3],
            decay_r: 3.0,
            modes: 4,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub samples: usize,
    pub initial: Preset,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            samples: 64,
            initial: Preset::SmoothBump,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub scheme: SchemeSection,
    pub noise: NoiseSection,
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        let noise = self.noise_spec()?;
        if let Some(&n) = grid.shape().iter().filter(|&&n| noise.modes >= n).min() {
            return Err(Error::Config(format!(
                "{} noise modes per axis need more than {} intervals",
                noise.modes, n
            )));
        }
        let t = &self.time;
        if !(t.horizon.is_finite() && t.horizon > 0.0) {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                t.horizon
            )));
        }
        if t.taus.is_empty() {
            return Err(Error::Config("the step-size ladder is empty".into()));
        }
        for (i, &tau) in t.taus.iter().enumerate() {
            dyadic_steps(t.horizon, tau)
                .map_err(|e| Error::Config(format!("ladder entry {i}: {e}")))?;
            if i > 0 && (t.taus[i - 1] / tau - 2.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "ladder must halve at every rung, got {} then {}",
                    t.taus[i - 1],
                    tau
                )));
            }
        }
        let tau_ref = self.tau_ref();
        dyadic_steps(t.horizon, tau_ref)
            .map_err(|e| Error::Config(format!("reference step: {e}")))?;
        if tau_ref > *t.taus.last().expect("nonempty") {
            return Err(Error::Config(format!(
                "reference step {tau_ref} exceeds the smallest ladder step"
            )));
        }
        if self.run.samples < 1 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        self.initial_state()?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(
            Cuboid::new(self.domain.lower, self.domain.upper)?,
            self.grid.intervals,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        let n = &self.noise;
        NoiseSpec::new(n.lambda1, n.lambda2, n.decay_r, n.modes, n.seed)
    }

    pub fn tau_ref(&self) -> f64 {
        self.time
            .tau_ref
            .unwrap_or_else(|| self.time.taus.last().copied().unwrap_or(self.time.horizon) / 4.0)
    }

    pub fn initial_state(&self) -> Result<crate::grid::StateZ> {
        self.run.initial.build(&self.grid_spec()?)
    }

    /// SHA-256 of the canonical JSON form of every field except the output directory.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.run.output_dir = PathBuf::new();
        let json = serde_json::to_string(&semantic).expect("configuration serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `horizon / tau` as a power of two.
fn dyadic_steps(horizon: f64, tau: f64) -> Result<usize> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Config(format!(
            "step size must be positive, got {tau}"
        )));
    }
    let ratio = horizon / tau;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n || !(n as u64).is_power_of_two() {
        return Err(Error::Config(format!(
            "step size {tau} is not the horizon over a power of two"
        )));
    }
    Ok(n as usize)
}
