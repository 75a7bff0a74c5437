//! One-dimensional wave systems along a single grid line.
//!
//! A line carries a Dirichlet component `u` (zero at both ends) and a free
//! component `v`, coupled by `u' = σ D v`, `v' = σ D u` with the
//! summation-by-parts derivative `D`. With `n` intervals, `D` is diagonal in the
//! discrete sine basis (for `u`) and cosine basis (for `v`):
//! `D sin_k = κ̃_k cos_k`, `D cos_k = -κ̃_k sin_k`, `κ̃_k = sin(kπ/n)/h`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{line_derivative, Closure};
use crate::noise::{cos_pi_ratio, sin_pi_ratio};

/// Largest endpoint value of a Dirichlet line accepted as zero.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Which frequency the spectral rotation uses for sine/cosine mode `k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Dispersion {
    /// `sin(kπ/n)/h`: the exact flow of the discretized line system.
    #[default]
    Stencil,
    /// `kπ/L`: continuum wave numbers.
    Continuum,
}

/// Transform tables for lines with `n` intervals of total length `length`.
#[derive(Clone, Debug)]
pub struct LineSpectrum {
    n: usize,
    /// `sines[(k-1)*(n+1) + i] = sin(kπi/n)`, `k = 1..n-1`.
    sines: Vec<f64>,
    /// `cosines[k*(n+1) + i] = cos(kπi/n)`, `k = 0..=n`.
    cosines: Vec<f64>,
    /// Frequencies of modes `k = 1..n-1`.
    kappa: Vec<f64>,
}

impl LineSpectrum {
    pub fn new(n: usize, length: f64, dispersion: Dispersion) -> Self {
        assert!(n >= 2, "a line needs at least two intervals");
        let h = length / n as f64;
        let mut sines = Vec::with_capacity((n - 1) * (n + 1));
        for k in 1..n {
            sines.extend((0..=n).map(|i| sin_pi_ratio(k * i, n)));
        }
        let mut cosines = Vec::with_capacity((n + 1) * (n + 1));
        for k in 0..=n {
            cosines.extend((0..=n).map(|i| cos_pi_ratio(k * i, n)));
        }
        let kappa = (1..n)
            .map(|k| match dispersion {
                Dispersion::Stencil => (k as f64 * PI / n as f64).sin() / h,
                Dispersion::Continuum => k as f64 * PI / length,
            })
            .collect();
        LineSpectrum {
            n,
            sines,
            cosines,
            kappa,
        }
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Frequency of the shared sine/cosine mode `k` (`1 <= k < n`).
    pub fn kappa(&self, k: usize) -> f64 {
        self.kappa[k - 1]
    }

    /// Sine coefficients `a_1..a_{n-1}` of a Dirichlet line.
    pub fn sine_coefficients(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let scale = 2.0 / n as f64;
        (1..n)
            .map(|k| {
                let row = &self.sines[(k - 1) * (n + 1)..k * (n + 1)];
                scale * (1..n).map(|i| u[i] * row[i]).sum::<f64>()
            })
            .collect()
    }

    /// Cosine coefficients `b_0..b_n` of a free line.
    pub fn cosine_coefficients(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..=n)
            .map(|k| {
                let row = &self.cosines[k * (n + 1)..(k + 1) * (n + 1)];
                let inner: f64 = (1..n).map(|i| v[i] * row[i]).sum();
                let sum = inner + 0.5 * (v[0] * row[0] + v[n] * row[n]);
                let scale = if k == 0 || k == n { 1.0 } else { 2.0 };
                scale * sum / n as f64
            })
            .collect()
    }

    pub fn synthesize_sine(&self, a: &[f64], u: &mut [f64]) {
        let n = self.n;
        for (i, ui) in u.iter_mut().enumerate().take(n).skip(1) {
            *ui = (1..n)
                .map(|k| a[k - 1] * self.sines[(k - 1) * (n + 1) + i])
                .sum();
        }
    }

    pub fn synthesize_cosine(&self, b: &[f64], v: &mut [f64]) {
        let n = self.n;
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = (0..=n).map(|k| b[k] * self.cosines[k * (n + 1) + i]).sum();
        }
    }
}

/// Exact flow of `(a, b)' = s·((0, κ), (-κ, 0))·(a, b)` for every shared mode of
/// the line pair, with `s = kappa_sign`. Cosine modes `0` and `n` are held fixed.
///
/// `u` and `v` hold all `n + 1` nodes; the endpoints of `u` are left untouched.
pub fn exact_line_wave(
    u: &mut [f64],
    v: &mut [f64],
    kappa_sign: f64,
    tau: f64,
    spectrum: &LineSpectrum,
) -> Result<()> {
    let n = spectrum.intervals();
    check_line(u, v, n)?;
    let mut a = spectrum.sine_coefficients(u);
    let mut b = spectrum.cosine_coefficients(v);
    for k in 1..n {
        let (sin, cos) = (spectrum.kappa(k) * tau).sin_cos();
        let (a0, b0) = (a[k - 1], b[k]);
        a[k - 1] = a0 * cos + kappa_sign * b0 * sin;
        b[k] = -kappa_sign * a0 * sin + b0 * cos;
    }
    spectrum.synthesize_sine(&a, u);
    spectrum.synthesize_cosine(&b, v);
    Ok(())
}

fn check_line(u: &[f64], v: &[f64], n: usize) -> Result<()> {
    if u.len() != n + 1 || v.len() != n + 1 {
        return Err(Error::Dimension(format!(
            "line pair of lengths {} and {} on {} intervals",
            u.len(),
            v.len(),
            n
        )));
    }
    if u[0].abs() > ENDPOINT_TOL || u[n].abs() > ENDPOINT_TOL {
        return Err(Error::BoundaryConsistency(format!(
            "Dirichlet line has endpoint values {} and {}",
            u[0], u[n]
        )));
    }
    Ok(())
}

/// Thomas factorization of a symmetric tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct TridiagonalFactor {
    off: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
    /// Eliminated super-diagonal `off[i] * inv_pivot[i]`.
    upper: Vec<f64>,
}

impl TridiagonalFactor {
    /// `diag` has length `m`, `off` length `m - 1` (zero-length systems are allowed).
    pub fn new(diag: &[f64], off: &[f64]) -> Result<Self> {
        let m = diag.len();
        if m > 0 && off.len() != m - 1 {
            return Err(Error::Dimension(format!(
                "tridiagonal system of size {m} needs {} off-diagonal entries, got {}",
                m - 1,
                off.len()
            )));
        }
        let mut inv_pivot = Vec::with_capacity(m);
        let mut upper = Vec::with_capacity(m.saturating_sub(1));
        let mut prev_upper = 0.0;
        for i in 0..m {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - off[i - 1] * prev_upper
            };
            if !(pivot.is_finite() && pivot.abs() > f64::MIN_POSITIVE) {
                return Err(Error::Numerical(format!("zero pivot at row {i}")));
            }
            inv_pivot.push(1.0 / pivot);
            if i + 1 < m {
                prev_upper = off[i] / pivot;
                upper.push(prev_upper);
            }
        }
        Ok(TridiagonalFactor {
            off: off.to_vec(),
            inv_pivot,
            upper,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve(&self, rhs: &mut [f64]) {
        let m = self.len();
        if m == 0 {
            return;
        }
        rhs[0] *= self.inv_pivot[0];
        for i in 1..m {
            rhs[i] = (rhs[i] - self.off[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..m - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

/// Factorized `Id - τ² D D` on the interior nodes of a Dirichlet line.
///
/// `D D` couples node `i` only to `i ± 2`, so the system splits into the odd and
/// the even interior nodes, each tridiagonal.
#[derive(Clone, Debug)]
pub struct ImplicitLineSolver {
    n: usize,
    h: f64,
    tau: f64,
    odd: TridiagonalFactor,
    even: TridiagonalFactor,
}

impl ImplicitLineSolver {
    pub fn new(n: usize, h: f64, tau: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::Stencil(format!("line with {n} intervals")));
        }
        let c = tau * tau / (4.0 * h * h);
        let chain = |first: usize| {
            let nodes: Vec<usize> = (first..n).step_by(2).collect();
            let diag: Vec<f64> = nodes
                .iter()
                .map(|&i| {
                    if i == 1 || i == n - 1 {
                        1.0 + 3.0 * c
                    } else {
                        1.0 + 2.0 * c
                    }
                })
                .collect();
            let off = vec![-c; nodes.len().saturating_sub(1)];
            TridiagonalFactor::new(&diag, &off)
        };
        Ok(ImplicitLineSolver {
            n,
            h,
            tau,
            odd: chain(1)?,
            even: chain(2)?,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Solves `(Id - τA)(u, v) = (u0, v0)` in place for the pair system `A` with sign `sign`.
    pub fn solve(
        &self,
        u: &mut [f64],
        v: &mut [f64],
        sign: f64,
        ws: &mut LineWorkspace,
    ) -> Result<()> {
        let n = self.n;
        check_line(u, v, n)?;
        ws.resize(n);
        let (tau, h) = (self.tau, self.h);
        // rhs = u0 + τσ D v0 on the interior.
        line_derivative(
            v,
            &mut ws.deriv,
            0,
            1,
            n + 1,
            h,
            tau * sign,
            Closure::SummationByParts,
        );
        ws.odd.clear();
        ws.odd.extend((1..n).step_by(2).map(|i| u[i] + ws.deriv[i]));
        ws.even.clear();
        ws.even
            .extend((2..n).step_by(2).map(|i| u[i] + ws.deriv[i]));
        self.odd.solve(&mut ws.odd);
        self.even.solve(&mut ws.even);
        for (i, x) in (1..n).step_by(2).zip(&ws.odd) {
            u[i] = *x;
        }
        for (i, x) in (2..n).step_by(2).zip(&ws.even) {
            u[i] = *x;
        }
        // v = v0 + τσ D u, with the Dirichlet ends of u held.
        let (u0, un) = (u[0], u[n]);
        u[0] = 0.0;
        u[n] = 0.0;
        line_derivative(
            u,
            &mut ws.deriv,
            0,
            1,
            n + 1,
            h,
            tau * sign,
            Closure::SummationByParts,
        );
        u[0] = u0;
        u[n] = un;
        for (vi, d) in v.iter_mut().zip(&ws.deriv) {
            *vi += d;
        }
        Ok(())
    }
}

/// Scratch buffers for one line: derivative buffer and the two chain right-hand sides.
#[derive(Clone, Debug, Default)]
pub struct LineWorkspace {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    deriv: Vec<f64>,
    du: Vec<f64>,
    odd: Vec<f64>,
    even: Vec<f64>,
}

impl LineWorkspace {
    pub fn new(n: usize) -> Self {
        let mut ws = LineWorkspace::default();
        ws.resize(n);
        ws
    }

    fn resize(&mut self, n: usize) {
        self.u.resize(n + 1, 0.0);
        self.v.resize(n + 1, 0.0);
        self.deriv.resize(n + 1, 0.0);
        self.du.resize(n + 1, 0.0);
    }
}

/// `(Id - τA)^{-1}` on one line pair.
pub fn implicit_euler_line(
    u: &mut [f64],
    v: &mut [f64],
    sign: f64,
    solver: &ImplicitLineSolver,
    ws: &mut LineWorkspace,
) -> Result<()> {
    solver.solve(u, v, sign, ws)
}

/// Cayley map `(Id - τ/2 A)^{-1}(Id + τ/2 A)` on one line pair; `half` must be
/// factorized for `τ/2`.
pub fn midpoint_line(
    u: &mut [f64],
    v: &mut [f64],
    sign: f64,
    half: &ImplicitLineSolver,
    ws: &mut LineWorkspace,
) -> Result<()> {
    let n = half.intervals();
    check_line(u, v, n)?;
    ws.resize(n);
    let (h, t) = (half.h, half.tau);
    line_derivative(
        v,
        &mut ws.deriv,
        0,
        1,
        n + 1,
        h,
        t * sign,
        Closure::SummationByParts,
    );
    let (u0, un) = (u[0], u[n]);
    u[0] = 0.0;
    u[n] = 0.0;
    line_derivative(
        u,
        &mut ws.du,
        0,
        1,
        n + 1,
        h,
        t * sign,
        Closure::SummationByParts,
    );
    for (ui, d) in u[1..n].iter_mut().zip(&ws.deriv[1..n]) {
        *ui += d;
    }
    u[0] = u0;
    u[n] = un;
    for (vi, d) in v.iter_mut().zip(&ws.du) {
        *vi += d;
    }
    half.solve(u, v, sign, ws)
}
