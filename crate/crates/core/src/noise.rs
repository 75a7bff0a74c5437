//! Truncated Karhunen–Loève representation of the Q-Wiener process.
//!
//! `W(t, x) = Σ_k sqrt(q_k) e_k(x) β_k(t)` over the modes `k = (k1, k2, k3)`,
//! `1 <= k_j <= K`, with Dirichlet sine eigenfunctions
//! `e_k = sqrt(8/(L1 L2 L3)) Π_j sin(k_j π x̂_j / L_j)` and eigenvalues
//! `q_k = (k1² + k2² + k3²)^(-r)`.
//!
//! Modes are numbered with `k1` slowest and `k3` fastest.

use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec, ScalarField};
use crate::rng;

/// Description of the driving noise and its amplitudes in the `E` and `H` equations.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub lambda1: [f64; 3],
    pub lambda2: [f64; 3],
    pub decay_r: f64,
    /// Per-axis mode truncation `K`.
    pub modes: usize,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(
        lambda1: [f64; 3],
        lambda2: [f64; 3],
        decay_r: f64,
        modes: usize,
        seed: u64,
    ) -> Result<Self> {
        let spec = NoiseSpec {
            lambda1,
            lambda2,
            decay_r,
            modes,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Silent noise: a single mode with zero amplitude.
    pub fn silent() -> Self {
        NoiseSpec {
            lambda1: [0.0; 3],
            lambda2: [0.0; 3],
            decay_r: 0.0,
            modes: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::Config(
                "noise needs at least one mode per axis".into(),
            ));
        }
        if !(self.decay_r.is_finite() && self.decay_r >= 0.0) {
            return Err(Error::Config(format!(
                "decay exponent must be finite and >= 0, got {}",
                self.decay_r
            )));
        }
        if self
            .lambda1
            .iter()
            .chain(&self.lambda2)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("noise amplitudes must be finite".into()));
        }
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.modes.pow(3)
    }

    /// Wave numbers `(k1, k2, k3)` of mode `index`.
    pub fn mode(&self, index: usize) -> [usize; 3] {
        let k = self.modes;
        [index / (k * k) + 1, (index / k) % k + 1, index % k + 1]
    }

    pub fn mode_index(&self, k: [usize; 3]) -> usize {
        ((k[0] - 1) * self.modes + (k[1] - 1)) * self.modes + (k[2] - 1)
    }

    pub fn eigenvalue(&self, k: [usize; 3]) -> f64 {
        let s = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        s.powf(-self.decay_r)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.mode_count())
            .map(|m| self.eigenvalue(self.mode(m)))
            .collect()
    }

    /// `|λ|² = |λ1|² + |λ2|²`.
    pub fn lambda_norm_sq(&self) -> f64 {
        self.lambda1
            .iter()
            .chain(&self.lambda2)
            .map(|v| v * v)
            .sum()
    }

    /// `|λ^[j]|² = (λ1^j)² + (λ2^j)²` for the subsystem split along `axis`.
    pub fn split_lambda_norm_sq(&self, axis: Axis) -> f64 {
        let j = axis.index();
        self.lambda1[j].powi(2) + self.lambda2[j].powi(2)
    }

    pub fn is_silent(&self) -> bool {
        self.lambda_norm_sq() == 0.0
    }
}

/// `sin(mπ/n)`, exactly zero when `n` divides `m`.
pub(crate) fn sin_pi_ratio(m: usize, n: usize) -> f64 {
    let r = m % (2 * n);
    if r.is_multiple_of(n) {
        0.0
    } else {
        (r as f64 * PI / n as f64).sin()
    }
}

/// `cos(mπ/n)`, exactly `±1` when `n` divides `m`.
pub(crate) fn cos_pi_ratio(m: usize, n: usize) -> f64 {
    match m % (2 * n) {
        0 => 1.0,
        r if r == n => -1.0,
        r => (r as f64 * PI / n as f64).cos(),
    }
}

/// Truncated trace `Σ_k q_k` over the retained modes.
pub fn trace_q(spec: &NoiseSpec) -> f64 {
    spec.eigenvalues().iter().sum()
}

/// Nodal samples of the sine eigenfunctions, stored per axis.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    grid: GridSpec,
    modes: usize,
    /// `sines[a][(k-1)*(n_a+1) + i] = sin(k π x̂_i / L_a)`.
    sines: [Vec<f64>; 3],
    cosines: [Vec<f64>; 3],
    wavenumbers: [Vec<f64>; 3],
    normalization: f64,
}

impl ModeBasis {
    /// Requires `K < n_j` on every axis; then the sampled modes are exactly
    /// orthonormal in the trapezoidal inner product.
    pub fn new(grid: GridSpec, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Config("mode basis needs at least one mode".into()));
        }
        if let Some(ax) = Axis::ALL.into_iter().find(|&a| modes >= grid.intervals(a)) {
            return Err(Error::Config(format!(
                "{} noise modes per axis do not resolve on {} intervals along {}",
                modes,
                grid.intervals(ax),
                ax.name()
            )));
        }
        let table = |ax: Axis, f: fn(usize, usize) -> f64| {
            let n = grid.intervals(ax);
            let mut t = Vec::with_capacity(modes * grid.nodes(ax));
            for k in 1..=modes {
                for i in 0..grid.nodes(ax) {
                    t.push(f(k * i, n));
                }
            }
            t
        };
        let sines = Axis::ALL.map(|ax| table(ax, sin_pi_ratio));
        let cosines = Axis::ALL.map(|ax| table(ax, cos_pi_ratio));
        let wavenumbers = Axis::ALL.map(|ax| {
            let l = grid.cuboid().length(ax);
            (1..=modes).map(|k| k as f64 * PI / l).collect()
        });
        Ok(ModeBasis {
            grid,
            modes,
            sines,
            cosines,
            wavenumbers,
            normalization: (8.0 / grid.cuboid().volume()).sqrt(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Nodal samples of `e_k`.
    pub fn mode_field(&self, k: [usize; 3]) -> ScalarField {
        let mut coeffs = vec![0.0; self.modes.pow(3)];
        coeffs[((k[0] - 1) * self.modes + (k[1] - 1)) * self.modes + (k[2] - 1)] = 1.0;
        self.synthesize(&coeffs, None)
    }

    /// `Σ_k c_k e_k` (or its derivative along `derivative`) at the nodes.
    pub fn synthesize(&self, coeffs: &[f64], derivative: Option<Axis>) -> ScalarField {
        let k = self.modes;
        assert_eq!(coeffs.len(), k * k * k, "coefficient vector length");
        let g = &self.grid;
        let [nx, ny, nz] = [g.nodes(Axis::X), g.nodes(Axis::Y), g.nodes(Axis::Z)];
        let factor = |ax: Axis| -> (&[f64], Option<&[f64]>) {
            if derivative == Some(ax) {
                (
                    &self.cosines[ax.index()],
                    Some(&self.wavenumbers[ax.index()]),
                )
            } else {
                (&self.sines[ax.index()], None)
            }
        };
        let (tx, kx) = factor(Axis::X);
        let (ty, ky) = factor(Axis::Y);
        let (tz, kz) = factor(Axis::Z);
        let scale = |w: Option<&[f64]>, m: usize| w.map_or(1.0, |w| w[m]);

        // t1[k1][k2][z] = Σ_k3 c[k1][k2][k3] Z_k3(z)
        let mut t1 = vec![0.0; k * k * nz];
        for a in 0..k {
            for b in 0..k {
                let row = &mut t1[(a * k + b) * nz..(a * k + b + 1) * nz];
                for c in 0..k {
                    let coef = coeffs[(a * k + b) * k + c] * scale(kz, c);
                    if coef == 0.0 {
                        continue;
                    }
                    for (r, t) in row.iter_mut().zip(&tz[c * nz..(c + 1) * nz]) {
                        *r += coef * t;
                    }
                }
            }
        }
        // t2[k1][z][y] = Σ_k2 Y_k2(y) t1[k1][k2][z]
        let mut t2 = vec![0.0; k * nz * ny];
        for a in 0..k {
            for b in 0..k {
                let sb = scale(ky, b);
                for z in 0..nz {
                    let v = t1[(a * k + b) * nz + z] * sb;
                    if v == 0.0 {
                        continue;
                    }
                    let dst = &mut t2[(a * nz + z) * ny..(a * nz + z + 1) * ny];
                    for (d, t) in dst.iter_mut().zip(&ty[b * ny..(b + 1) * ny]) {
                        *d += v * t;
                    }
                }
            }
        }
        // out[z][y][x] = norm Σ_k1 X_k1(x) t2[k1][z][y]
        let mut out = vec![0.0; g.node_count()];
        for a in 0..k {
            let sa = scale(kx, a) * self.normalization;
            let xrow = &tx[a * nx..(a + 1) * nx];
            for z in 0..nz {
                for y in 0..ny {
                    let v = t2[(a * nz + z) * ny + y] * sa;
                    if v == 0.0 {
                        continue;
                    }
                    let base = g.index(0, y, z);
                    for (o, t) in out[base..base + nx].iter_mut().zip(xrow) {
                        *o += v * t;
                    }
                }
            }
        }
        ScalarField::from_values(*g, out).expect("synthesized field has grid size")
    }
}

/// Per-mode Brownian increments on the finest time grid, with all dyadic
/// coarsenings precomputed by pairwise summation.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianLattice {
    seed: u64,
    sample_id: u64,
    modes: usize,
    horizon: f64,
    n_fine: usize,
    /// `levels[l]` holds `n_fine >> l` increments per mode, mode-major.
    levels: Vec<Vec<f64>>,
}

impl BrownianLattice {
    fn from_fine(
        seed: u64,
        sample_id: u64,
        modes: usize,
        horizon: f64,
        n_fine: usize,
        fine: Vec<f64>,
    ) -> Self {
        let count = modes.pow(3);
        debug_assert_eq!(fine.len(), count * n_fine);
        let mut levels = vec![fine];
        let mut len = n_fine;
        while len.is_multiple_of(2) {
            let prev = levels.last().expect("at least the finest level");
            let half = len / 2;
            let mut next = Vec::with_capacity(count * half);
            for m in 0..count {
                let row = &prev[m * len..(m + 1) * len];
                next.extend(row.chunks_exact(2).map(|p| p[0] + p[1]));
            }
            levels.push(next);
            len = half;
        }
        BrownianLattice {
            seed,
            sample_id,
            modes,
            horizon,
            n_fine,
            levels,
        }
    }

    /// Lattice with every increment zero.
    pub fn zeros(spec: &NoiseSpec, horizon: f64, n_fine: usize) -> Self {
        let fine = vec![0.0; spec.mode_count() * n_fine];
        BrownianLattice::from_fine(spec.seed, 0, spec.modes, horizon, n_fine, fine)
    }

    /// Lattice built from explicit finest-level increments (mode-major).
    pub fn from_increments(
        spec: &NoiseSpec,
        sample_id: u64,
        horizon: f64,
        n_fine: usize,
        fine: Vec<f64>,
    ) -> Result<Self> {
        if fine.len() != spec.mode_count() * n_fine {
            return Err(Error::Dimension(format!(
                "expected {} increments, got {}",
                spec.mode_count() * n_fine,
                fine.len()
            )));
        }
        Ok(BrownianLattice::from_fine(
            spec.seed, sample_id, spec.modes, horizon, n_fine, fine,
        ))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_id(&self) -> u64 {
        self.sample_id
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tau_fine(&self) -> f64 {
        self.horizon / self.n_fine as f64
    }

    /// Finest-level increments of one mode.
    pub fn fine_increments(&self, mode: usize) -> &[f64] {
        &self.levels[0][mode * self.n_fine..(mode + 1) * self.n_fine]
    }

    /// Level whose step count is `steps`, if it is a dyadic coarsening of the finest level.
    pub fn level_for(&self, steps: usize) -> Result<usize> {
        if steps == 0
            || !self.n_fine.is_multiple_of(steps)
            || !(self.n_fine / steps).is_power_of_two()
        {
            return Err(Error::Indexing(format!(
                "{} steps is not a dyadic coarsening of {} fine steps",
                steps, self.n_fine
            )));
        }
        let level = (self.n_fine / steps).trailing_zeros() as usize;
        if level >= self.levels.len() {
            return Err(Error::Indexing(format!("level {level} not available")));
        }
        Ok(level)
    }

    /// Increment of every mode's Brownian motion over step `n` of a `steps`-step path.
    pub fn increments(&self, steps: usize, n: usize) -> Result<Vec<f64>> {
        let level = self.level_for(steps)?;
        if n >= steps {
            return Err(Error::Indexing(format!(
                "step {n} outside a {steps}-step path"
            )));
        }
        let data = &self.levels[level];
        Ok((0..self.modes.pow(3))
            .map(|m| data[m * steps + n])
            .collect())
    }

    /// Writes the header `seed, sample_id, K, N_fine` (little-endian u64) followed by
    /// the finest increments as little-endian f64 in mode-major order.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for h in [
            self.seed,
            self.sample_id,
            self.modes as u64,
            self.n_fine as u64,
        ] {
            w.write_all(&h.to_le_bytes())?;
        }
        for v in &self.levels[0] {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump produced by [`BrownianLattice::write_to`].
    pub fn read_from(mut r: impl Read, horizon: f64) -> std::io::Result<Self> {
        let mut word = [0u8; 8];
        let mut header = [0u64; 4];
        for h in header.iter_mut() {
            r.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        let [seed, sample_id, modes, n_fine] = header;
        let count = (modes as usize).pow(3) * n_fine as usize;
        let mut fine = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut word)?;
            fine.push(f64::from_le_bytes(word));
        }
        Ok(BrownianLattice::from_fine(
            seed,
            sample_id,
            modes as usize,
            horizon,
            n_fine as usize,
            fine,
        ))
    }
}

/// Draws the per-mode Brownian increments of sample `sample_id` on `n_fine`
/// uniform steps of `[0, horizon]`.
pub fn sample_lattice(
    spec: &NoiseSpec,
    sample_id: u64,
    horizon: f64,
    n_fine: usize,
) -> Result<BrownianLattice> {
    spec.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) || n_fine == 0 {
        return Err(Error::Config(format!(
            "lattice needs a positive horizon and step count, got T={horizon}, N={n_fine}"
        )));
    }
    let count = spec.mode_count();
    if n_fine > u32::MAX as usize + 1 || count > u32::MAX as usize + 1 {
        return Err(Error::Config(format!(
            "{count} modes x {n_fine} steps exceed the generator's counter space"
        )));
    }
    let sd = (horizon / n_fine as f64).sqrt();
    let mut fine = Vec::with_capacity(count * n_fine);
    for m in 0..count {
        for t in 0..n_fine {
            fine.push(sd * rng::normal_at(spec.seed, sample_id, m as u32, t as u32));
        }
    }
    Ok(BrownianLattice::from_fine(
        spec.seed, sample_id, spec.modes, horizon, n_fine, fine,
    ))
}

/// `ΔW(x) = Σ_k sqrt(q_k) e_k(x) ΔB_k`, with the per-mode coefficients kept.
#[derive(Clone, Debug)]
pub struct NoiseIncrement {
    /// `sqrt(q_k) ΔB_k` per mode.
    pub coefficients: Vec<f64>,
    pub field: ScalarField,
}

impl NoiseIncrement {
    pub fn zero(grid: GridSpec, modes: usize) -> Self {
        NoiseIncrement {
            coefficients: vec![0.0; modes.pow(3)],
            field: ScalarField::zeros(grid),
        }
    }

    pub fn from_coefficients(basis: &ModeBasis, coefficients: Vec<f64>) -> Self {
        let field = basis.synthesize(&coefficients, None);
        NoiseIncrement {
            coefficients,
            field,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }
}

/// Noise increment over step `n` of a `steps`-step path.
pub fn increment_field(
    lattice: &BrownianLattice,
    basis: &ModeBasis,
    spec: &NoiseSpec,
    steps: usize,
    n: usize,
) -> Result<NoiseIncrement> {
    if lattice.modes() != basis.modes() || spec.modes != basis.modes() {
        return Err(Error::Dimension(format!(
            "lattice has {} modes per axis, basis {}, spec {}",
            lattice.modes(),
            basis.modes(),
            spec.modes
        )));
    }
    let db = lattice.increments(steps, n)?;
    let coefficients = db
        .iter()
        .zip(spec.eigenvalues())
        .map(|(b, q)| q.sqrt() * b)
        .collect();
    Ok(NoiseIncrement::from_coefficients(basis, coefficients))
}

/// Analytic gradient of an increment field, `(∂x ΔW, ∂y ΔW, ∂z ΔW)`.
pub fn grad_increment_field(increment: &NoiseIncrement, basis: &ModeBasis) -> [ScalarField; 3] {
    Axis::ALL.map(|ax| basis.synthesize(&increment.coefficients, Some(ax)))
}
