//! Named initial states.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Component, GridSpec, ScalarField, StateZ};
use crate::noise::{cos_pi_ratio, sin_pi_ratio};

const BUMP_E: [f64; 3] = [1.0, -0.5, 0.75];
const BUMP_H: [f64; 3] = [0.25, 0.6, -0.4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Preset {
    Zero,
    /// Electric standing wave of the cavity with mode numbers `k`, magnetic part zero.
    CavityMode([usize; 3]),
    /// Fixed amplitudes times `Π_j sin²(π x̂_j / L_j)` in every component.
    SmoothBump,
}

impl Preset {
    pub fn build(&self, grid: &GridSpec) -> Result<StateZ> {
        match *self {
            Preset::Zero => Ok(StateZ::zeros(*grid)),
            Preset::CavityMode(k) => CavityMode::new(grid, k)?.state(),
            Preset::SmoothBump => Ok(smooth_bump(grid)),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Zero => write!(f, "zero"),
            Preset::CavityMode([a, b, c]) => write!(f, "cavity-mode {a},{b},{c}"),
            Preset::SmoothBump => write!(f, "smooth-bump"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "zero" => return Ok(Preset::Zero),
            "smooth-bump" => return Ok(Preset::SmoothBump),
            _ => {}
        }
        let bad = || Error::Config(format!("unknown initial preset {s:?}"));
        let rest = s.strip_prefix("cavity-mode").ok_or_else(bad)?;
        let parts: Vec<&str> = rest
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "cavity-mode needs three mode numbers, got {rest:?}"
            )));
        }
        let mut k = [0usize; 3];
        for (slot, p) in k.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| bad())?;
        }
        Ok(Preset::CavityMode(k))
    }
}

impl TryFrom<String> for Preset {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Preset> for String {
    fn from(p: Preset) -> String {
        p.to_string()
    }
}

fn bump_profile(grid: &GridSpec) -> ScalarField {
    let [n1, n2, n3] = grid.shape();
    let sq = |i: usize, n: usize| sin_pi_ratio(i, n).powi(2);
    let mut values = Vec::with_capacity(grid.node_count());
    for k in 0..=n3 {
        for j in 0..=n2 {
            for i in 0..=n1 {
                values.push(sq(i, n1) * sq(j, n2) * sq(k, n3));
            }
        }
    }
    ScalarField::from_values(*grid, values).expect("profile has one value per node")
}

pub fn smooth_bump(grid: &GridSpec) -> StateZ {
    let profile = bump_profile(grid);
    let mut z = StateZ::zeros(*grid);
    for d in 0..3 {
        for (c, a) in [
            (Component::electric(d), BUMP_E[d]),
            (Component::magnetic(d), BUMP_H[d]),
        ] {
            for (x, p) in z.component_mut(c).iter_mut().zip(profile.values()) {
                *x = a * p;
            }
        }
    }
    z
}

/// Analytic eigenfield of the PEC cavity,
/// `E = (A1 c1 s2 s3, A2 s1 c2 s3, A3 s1 s2 c3)` with `s_j = sin(κ_j x̂_j)`,
/// `c_j = cos(κ_j x̂_j)`, `κ_j = k_j π / L_j` and `A ⊥ κ`.
///
/// `curl curl E = ω² E` with `ω = |κ|`; the partner `H = -curl E / ω` satisfies
/// `curl H = -ω E`.
#[derive(Clone, Debug)]
pub struct CavityMode {
    grid: GridSpec,
    k: [usize; 3],
    kappa: [f64; 3],
    amplitude: [f64; 3],
}

impl CavityMode {
    pub fn new(grid: &GridSpec, k: [usize; 3]) -> Result<Self> {
        let kappa =
            Axis::ALL.map(|a| k[a.index()] as f64 * std::f64::consts::PI / grid.cuboid().length(a));
        let zeros: Vec<usize> = (0..3).filter(|&j| k[j] == 0).collect();
        let amplitude = match zeros.len() {
            0 => {
                let min = (0..3)
                    .min_by(|&a, &b| kappa[a].total_cmp(&kappa[b]))
                    .unwrap_or(0);
                let mut e = [0.0; 3];
                e[min] = 1.0;
                let a = cross(kappa, e);
                let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                a.map(|x| x / norm)
            }
            1 => {
                let mut a = [0.0; 3];
                a[zeros[0]] = 1.0;
                a
            }
            _ => {
                return Err(Error::Config(format!(
                    "cavity mode {k:?} vanishes identically; at most one mode number may be zero"
                )))
            }
        };
        for a in Axis::ALL {
            if k[a.index()] >= grid.intervals(a) {
                return Err(Error::Config(format!(
                    "mode number {} along {} is not resolved by {} intervals",
                    k[a.index()],
                    a.name(),
                    grid.intervals(a)
                )));
            }
        }
        Ok(CavityMode {
            grid: *grid,
            k,
            kappa,
            amplitude,
        })
    }

    pub fn omega(&self) -> f64 {
        self.kappa.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn amplitude(&self) -> [f64; 3] {
        self.amplitude
    }

    /// `(sin, cos)` of `κ_a x̂_a` at node index `i`.
    fn trig(&self, a: usize, i: usize) -> (f64, f64) {
        let n = self.grid.shape()[a];
        (
            sin_pi_ratio(self.k[a] * i, n),
            cos_pi_ratio(self.k[a] * i, n),
        )
    }

    fn fill(&self, f: impl Fn([(f64, f64); 3]) -> [f64; 3]) -> [ScalarField; 3] {
        let [n1, n2, n3] = self.grid.shape();
        let mut out: [Vec<f64>; 3] = Default::default();
        for k in 0..=n3 {
            for j in 0..=n2 {
                for i in 0..=n1 {
                    let v = f([self.trig(0, i), self.trig(1, j), self.trig(2, k)]);
                    for d in 0..3 {
                        out[d].push(v[d]);
                    }
                }
            }
        }
        out.map(|v| ScalarField::from_values(self.grid, v).expect("one value per node"))
    }

    pub fn electric(&self) -> [ScalarField; 3] {
        let a = self.amplitude;
        self.fill(|[(s1, c1), (s2, c2), (s3, c3)]| {
            [
                a[0] * c1 * s2 * s3,
                a[1] * s1 * c2 * s3,
                a[2] * s1 * s2 * c3,
            ]
        })
    }

    /// `H = -curl E / ω`.
    pub fn magnetic(&self) -> [ScalarField; 3] {
        let (a, k, w) = (self.amplitude, self.kappa, self.omega());
        let r = [
            (a[1] * k[2] - a[2] * k[1]) / w,
            (a[2] * k[0] - a[0] * k[2]) / w,
            (a[0] * k[1] - a[1] * k[0]) / w,
        ];
        self.fill(|[(s1, c1), (s2, c2), (s3, c3)]| {
            [
                r[0] * s1 * c2 * c3,
                r[1] * c1 * s2 * c3,
                r[2] * c1 * c2 * s3,
            ]
        })
    }

    /// `(E, 0)`.
    pub fn state(&self) -> Result<StateZ> {
        let [e1, e2, e3] = self.electric();
        let zero = ScalarField::zeros(self.grid);
        StateZ::from_fields([&e1, &e2, &e3, &zero, &zero, &zero])
    }

    /// `(0, H)`: the state reached after a quarter period, up to sign.
    pub fn rotated_state(&self) -> Result<StateZ> {
        let [h1, h2, h3] = self.magnetic();
        let zero = ScalarField::zeros(self.grid);
        StateZ::from_fields([&zero, &zero, &zero, &h1, &h2, &h3])
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{discrete_curl, electric_divergence, energy, Cuboid};

    #[test]
    fn presets_parse_and_print() {
        for s in ["zero", "smooth-bump", "cavity-mode 1,2,0"] {
            assert_eq!(s.parse::<Preset>().unwrap().to_string(), s);
        }
        assert_eq!(
            "cavity-mode 2 1 1".parse::<Preset>().unwrap(),
            Preset::CavityMode([2, 1, 1])
        );
        assert!("cavity-mode 1,2".parse::<Preset>().is_err());
        assert!("gaussian".parse::<Preset>().is_err());
        let json = serde_json::to_string(&Preset::CavityMode([1, 1, 1])).unwrap();
        assert_eq!(json, "\"cavity-mode 1,1,1\"");
        let back: Preset = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Preset::CavityMode([1, 1, 1]));
    }

    #[test]
    fn presets_are_boundary_consistent() {
        let g = GridSpec::new(Cuboid::new([0.0; 3], [1.0, 2.0, 1.5]).unwrap(), [6, 8, 7]).unwrap();
        for p in [
            Preset::Zero,
            Preset::SmoothBump,
            Preset::CavityMode([1, 2, 0]),
            Preset::CavityMode([2, 1, 3]),
        ] {
            let z = p.build(&g).unwrap();
            assert_eq!(z.pec_violation(), 0.0, "{p}");
        }
        assert!(Preset::CavityMode([1, 0, 0]).build(&g).is_err());
        assert!(Preset::CavityMode([6, 1, 1]).build(&g).is_err());
    }

    #[test]
    fn smooth_bump_is_flat_at_the_walls() {
        let g = GridSpec::cube(16).unwrap();
        let z = smooth_bump(&g);
        let e1 = z.field(Component::E1);
        // Values next to a wall scale like h² because the first derivative vanishes there.
        let h = 1.0 / 16.0;
        let near = e1.at(1, 8, 8);
        let centre = e1.at(8, 8, 8);
        assert!((near / centre - (std::f64::consts::PI * h).sin().powi(2)).abs() < 1e-14);
        assert_eq!(centre, 1.0);
        assert!(energy(&z) > 0.0);
    }

    #[test]
    fn cavity_amplitude_is_transverse() {
        let g = GridSpec::new(Cuboid::new([0.0; 3], [1.0, 2.0, 3.0]).unwrap(), [8, 8, 8]).unwrap();
        for k in [[1, 1, 1], [2, 1, 3], [1, 0, 2]] {
            let m = CavityMode::new(&g, k).unwrap();
            let a = m.amplitude();
            let dot: f64 = (0..3).map(|j| a[j] * m.kappa[j]).sum();
            assert!(dot.abs() < 1e-14, "{k:?}");
            assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    fn eigen_defect(n: usize, k: [usize; 3]) -> (f64, f64) {
        let g = GridSpec::new(Cuboid::new([0.0; 3], [1.0, 1.2, 0.9]).unwrap(), [n; 3]).unwrap();
        let m = CavityMode::new(&g, k).unwrap();
        let w = m.omega();
        let e = m.state().unwrap();
        let h = m.rotated_state().unwrap();
        // M (E, 0) = ω (0, H) and M (0, H) = -ω (E, 0).
        let mut d1 = discrete_curl(&e).unwrap();
        d1.add_scaled(-w, &h).unwrap();
        let mut d2 = discrete_curl(&h).unwrap();
        d2.add_scaled(w, &e).unwrap();
        let div = electric_divergence(&discrete_curl(&h).unwrap())
            .unwrap()
            .max_abs();
        (d1.max_abs().max(d2.max_abs()) / w, div / w)
    }

    #[test]
    fn cavity_mode_is_a_discrete_eigenpair_to_second_order() {
        for k in [[1, 1, 1], [2, 1, 0]] {
            let (coarse, div_coarse) = eigen_defect(8, k);
            let (fine, div_fine) = eigen_defect(16, k);
            assert!(coarse / fine > 3.5, "{k:?}: {coarse} -> {fine}");
            // Modes constant along one axis are discretely divergence free.
            assert!(
                div_fine < 1e-12 || div_coarse / div_fine > 3.5,
                "{k:?}: {div_coarse} -> {div_fine}"
            );
            assert!(fine < 0.05, "{k:?}: {fine}");
        }
    }
}
