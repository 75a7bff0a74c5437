//! The three sub-flows: deterministic sub-propagators along one axis, reduced to
//! independent line solves, plus the additive stochastic shift of each subsystem.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{coupled_pairs, noise_components, Axis, CoupledPair, GridSpec, StateZ};
use crate::line::{
    exact_line_wave, implicit_euler_line, midpoint_line, Dispersion, ImplicitLineSolver,
    LineSpectrum, LineWorkspace,
};
use crate::noise::{NoiseIncrement, NoiseSpec};

/// Tolerance, relative to the state's magnitude, for the boundary-consistency precondition.
const CONSISTENCY_TOL: f64 = 1e-12;

/// Which sub-propagator a stage uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// `e^{τ M_α}`.
    #[serde(alias = "ee")]
    Exact,
    /// `(Id - τ M_α)^{-1}`.
    #[serde(alias = "ie")]
    ImplicitEuler,
    /// `(Id - τ/2 M_α)^{-1}(Id + τ/2 M_α)`.
    #[serde(alias = "mp")]
    Midpoint,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::Exact,
        SchemeKind::ImplicitEuler,
        SchemeKind::Midpoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Exact => "exact",
            SchemeKind::ImplicitEuler => "implicit-euler",
            SchemeKind::Midpoint => "midpoint",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "ee" => Ok(SchemeKind::Exact),
            "implicit-euler" | "implicit_euler" | "ie" => Ok(SchemeKind::ImplicitEuler),
            "midpoint" | "mp" => Ok(SchemeKind::Midpoint),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

enum Kernel {
    /// Dense line propagators, one per coupled pair.
    Exact([DMatrix<f64>; 2]),
    Implicit(ImplicitLineSolver),
    /// Factorized for `τ/2`.
    Midpoint(ImplicitLineSolver),
}

struct AxisPlan {
    n: usize,
    stride: usize,
    /// Lines on which both members of the pair are unconstrained in the interior.
    lines: [Vec<usize>; 2],
    kernel: Kernel,
}

/// Precomputed sub-propagators of one scheme and step size on one grid.
pub struct SubflowPlan {
    grid: GridSpec,
    scheme: SchemeKind,
    tau: f64,
    axes: [AxisPlan; 3],
}

impl fmt::Debug for SubflowPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubflowPlan")
            .field("grid", &self.grid.shape())
            .field("scheme", &self.scheme)
            .field("tau", &self.tau)
            .finish()
    }
}

/// Whether a component is forced to zero along the whole line through `start`
/// by a face normal to some axis other than the line's.
fn line_masked(grid: &GridSpec, start: usize, axis: Axis, c: crate::grid::Component) -> bool {
    let node = grid.node(start);
    Axis::ALL
        .into_iter()
        .any(|b| b != axis && c.vanishes_on(b) && grid.on_face(node, b))
}

/// Propagator of a pair line in the layout `(u_1..u_{n-1}, v_0..v_n)`.
fn exact_line_matrix(spectrum: &LineSpectrum, sign: f64, tau: f64) -> Result<DMatrix<f64>> {
    let n = spectrum.intervals();
    let dim = 2 * n;
    let mut g = DMatrix::zeros(dim, dim);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    for col in 0..dim {
        u.iter_mut().for_each(|x| *x = 0.0);
        v.iter_mut().for_each(|x| *x = 0.0);
        if col < n - 1 {
            u[col + 1] = 1.0;
        } else {
            v[col - (n - 1)] = 1.0;
        }
        exact_line_wave(&mut u, &mut v, -sign, tau, spectrum)?;
        for r in 0..n - 1 {
            g[(r, col)] = u[r + 1];
        }
        for r in 0..=n {
            g[(n - 1 + r, col)] = v[r];
        }
    }
    Ok(g)
}

impl SubflowPlan {
    pub fn new(grid: GridSpec, scheme: SchemeKind, tau: f64) -> Result<Self> {
        SubflowPlan::with_dispersion(grid, scheme, tau, Dispersion::Stencil)
    }

    pub fn with_dispersion(
        grid: GridSpec,
        scheme: SchemeKind,
        tau: f64,
        dispersion: Dispersion,
    ) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::Config(format!(
                "step size must be finite, got {tau}"
            )));
        }
        let build = |axis: Axis| -> Result<AxisPlan> {
            let n = grid.intervals(axis);
            let h = grid.spacing(axis);
            let starts = grid.line_starts(axis);
            let pairs = coupled_pairs(axis);
            let lines = pairs.map(|p: CoupledPair| {
                starts
                    .iter()
                    .copied()
                    .filter(|&s| {
                        !line_masked(&grid, s, axis, p.dirichlet)
                            && !line_masked(&grid, s, axis, p.free)
                    })
                    .collect()
            });
            let kernel = match scheme {
                SchemeKind::Exact => {
                    let spectrum = LineSpectrum::new(n, grid.cuboid().length(axis), dispersion);
                    Kernel::Exact([
                        exact_line_matrix(&spectrum, pairs[0].sign, tau)?,
                        exact_line_matrix(&spectrum, pairs[1].sign, tau)?,
                    ])
                }
                SchemeKind::ImplicitEuler => Kernel::Implicit(ImplicitLineSolver::new(n, h, tau)?),
                SchemeKind::Midpoint => Kernel::Midpoint(ImplicitLineSolver::new(n, h, 0.5 * tau)?),
            };
            Ok(AxisPlan {
                n,
                stride: grid.stride(axis),
                lines,
                kernel,
            })
        };
        Ok(SubflowPlan {
            grid,
            scheme,
            tau,
            axes: [build(Axis::X)?, build(Axis::Y)?, build(Axis::Z)?],
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn check_state(&self, state: &StateZ) -> Result<()> {
        if state.grid() != &self.grid {
            return Err(Error::Dimension(format!(
                "state grid {:?} does not match plan grid {:?}",
                state.grid().shape(),
                self.grid.shape()
            )));
        }
        let violation = state.pec_violation();
        if violation > CONSISTENCY_TOL * state.max_abs().max(1.0) {
            return Err(Error::BoundaryConsistency(format!(
                "PEC trace violated by {violation:e}"
            )));
        }
        Ok(())
    }

    /// Deterministic sub-propagator along `axis`, in place.
    pub fn apply_semigroup(&self, state: &mut StateZ, axis: Axis) -> Result<()> {
        self.check_state(state)?;
        let plan = &self.axes[axis.index()];
        let nodes = self.grid.node_count();
        let (n, stride) = (plan.n, plan.stride);
        let data = state.as_mut_slice();
        for (p, pair) in coupled_pairs(axis).iter().enumerate() {
            let lines = &plan.lines[p];
            if lines.is_empty() {
                continue;
            }
            let (ub, vb) = (pair.dirichlet.index() * nodes, pair.free.index() * nodes);
            match &plan.kernel {
                Kernel::Exact(props) => {
                    let dim = 2 * n;
                    let mut x = DMatrix::<f64>::zeros(dim, lines.len());
                    let buf = x.as_mut_slice();
                    for (col, &s) in lines.iter().enumerate() {
                        let c = &mut buf[col * dim..(col + 1) * dim];
                        for i in 1..n {
                            c[i - 1] = data[ub + s + i * stride];
                        }
                        for i in 0..=n {
                            c[n - 1 + i] = data[vb + s + i * stride];
                        }
                    }
                    let y = &props[p] * x;
                    let out = y.as_slice();
                    for (col, &s) in lines.iter().enumerate() {
                        let c = &out[col * dim..(col + 1) * dim];
                        for i in 1..n {
                            data[ub + s + i * stride] = c[i - 1];
                        }
                        for i in 0..=n {
                            data[vb + s + i * stride] = c[n - 1 + i];
                        }
                    }
                }
                Kernel::Implicit(solver) | Kernel::Midpoint(solver) => {
                    let mut ws = LineWorkspace::new(n);
                    let mut u = vec![0.0; n + 1];
                    let mut v = vec![0.0; n + 1];
                    for &s in lines {
                        for i in 0..=n {
                            u[i] = data[ub + s + i * stride];
                            v[i] = data[vb + s + i * stride];
                        }
                        // Masked entries are exact zeros up to the consistency tolerance.
                        u[0] = 0.0;
                        u[n] = 0.0;
                        if matches!(plan.kernel, Kernel::Implicit(_)) {
                            implicit_euler_line(&mut u, &mut v, pair.sign, solver, &mut ws)?;
                        } else {
                            midpoint_line(&mut u, &mut v, pair.sign, solver, &mut ws)?;
                        }
                        for i in 1..n {
                            data[ub + s + i * stride] = u[i];
                        }
                        for i in 0..=n {
                            data[vb + s + i * stride] = v[i];
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// One sub-flow `Ψ^[j]` (stage `j` along axis `j`), in place, followed by the PEC masks.
    ///
    /// Implicit Euler and the exact flow shift first and then propagate,
    /// `S_α(Z + λ^[j]ΔW)`; the midpoint form propagates and adds the filtered
    /// shift, `S^M_α Z + T^M_α λ^[j]ΔW`. Because `M_α λ^[j] = 0`, the filter
    /// `T^M_α` acts as the identity on the shift and both orders agree bitwise.
    pub fn sub_flow(
        &self,
        state: &mut StateZ,
        j: usize,
        increment: &NoiseIncrement,
        spec: &NoiseSpec,
    ) -> Result<()> {
        let axis = stage_axis(j)?;
        match self.scheme {
            SchemeKind::Exact | SchemeKind::ImplicitEuler => {
                shift_in_place(state, j, increment, spec)?;
                self.apply_semigroup(state, axis)?;
            }
            SchemeKind::Midpoint => {
                self.apply_semigroup(state, axis)?;
                shift_in_place(state, j, increment, spec)?;
            }
        }
        state.apply_pec();
        Ok(())
    }
}

fn stage_axis(j: usize) -> Result<Axis> {
    if !(1..=3).contains(&j) {
        return Err(Error::Indexing(format!(
            "subsystem index {j} outside 1..=3"
        )));
    }
    Ok(Axis::ALL[j - 1])
}

/// Adds `λ1^j ΔW` to `E_j` and `λ2^j ΔW` to `H_j`.
pub(crate) fn shift_in_place(
    state: &mut StateZ,
    j: usize,
    increment: &NoiseIncrement,
    spec: &NoiseSpec,
) -> Result<()> {
    let axis = stage_axis(j)?;
    if increment.field.grid() != state.grid() {
        return Err(Error::Dimension(
            "noise increment lives on a different grid".into(),
        ));
    }
    let (e, h) = noise_components(axis);
    let (le, lh) = (spec.lambda1[j - 1], spec.lambda2[j - 1]);
    let dw = increment.field.values();
    if le != 0.0 {
        for (x, w) in state.component_mut(e).iter_mut().zip(dw) {
            *x += le * w;
        }
    }
    if lh != 0.0 {
        for (x, w) in state.component_mut(h).iter_mut().zip(dw) {
            *x += lh * w;
        }
    }
    Ok(())
}

/// `S_α(τ)`, `S^{IE}_{τ,α}` or `S^M_{τ,α}` applied to `state`.
pub fn apply_sub_semigroup(
    state: &StateZ,
    axis: Axis,
    scheme: SchemeKind,
    tau: f64,
) -> Result<StateZ> {
    let plan = SubflowPlan::new(*state.grid(), scheme, tau)?;
    let mut out = state.clone();
    plan.apply_semigroup(&mut out, axis)?;
    Ok(out)
}

/// Stochastic shift of subsystem `j`. For every scheme this is the plain
/// addition of `λ^[j]ΔW`: the midpoint filter `T^M` fixes `λ^[j]`.
pub fn apply_stochastic_shift(
    state: &StateZ,
    j: usize,
    increment: &NoiseIncrement,
    spec: &NoiseSpec,
    _scheme: SchemeKind,
    _tau: f64,
) -> Result<StateZ> {
    let mut out = state.clone();
    shift_in_place(&mut out, j, increment, spec)?;
    Ok(out)
}

/// Sub-flow `Ψ^[j]` over one step of size `tau`.
pub fn sub_flow(
    state: &StateZ,
    j: usize,
    scheme: SchemeKind,
    tau: f64,
    increment: &NoiseIncrement,
    spec: &NoiseSpec,
) -> Result<StateZ> {
    let plan = SubflowPlan::new(*state.grid(), scheme, tau)?;
    let mut out = state.clone();
    plan.sub_flow(&mut out, j, increment, spec)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{discrete_curl_alpha, norm_l2, Component, Cuboid, ScalarField};
    use crate::noise::{increment_field, sample_lattice, ModeBasis};
    use std::f64::consts::PI;

    fn random_state(grid: GridSpec, seed: u64) -> StateZ {
        let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let data = (0..grid.state_len())
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let mut st = StateZ::from_flat(grid, data).unwrap();
        st.apply_pec();
        st
    }

    fn grid() -> GridSpec {
        GridSpec::new(Cuboid::new([0.0; 3], [1.0, 1.2, 0.8]).unwrap(), [6, 5, 7]).unwrap()
    }

    #[test]
    fn noise_pattern_passes_unchanged() {
        let g = grid();
        let r = random_state(g, 1);
        for axis in Axis::ALL {
            let (e, h) = noise_components(axis);
            let mut s = StateZ::zeros(g);
            s.component_mut(e).copy_from_slice(r.component(e));
            s.component_mut(h).copy_from_slice(r.component(h));
            for scheme in SchemeKind::ALL {
                let out = apply_sub_semigroup(&s, axis, scheme, 0.3).unwrap();
                assert_eq!(out, s, "{axis:?} {scheme}");
            }
        }
    }

    #[test]
    fn exact_single_mode_matches_closed_form() {
        let g = GridSpec::new(Cuboid::new([0.0; 3], [2.0, 1.0, 1.0]).unwrap(), [16, 4, 4]).unwrap();
        let (n, l1, tau) = (16usize, 2.0, 0.21);
        let kappa = (PI / n as f64).sin() / g.spacing(Axis::X);
        let mut s = StateZ::zeros(g);
        s.set_field(
            Component::E2,
            &ScalarField::from_fn(g, |x, _, _| (PI * x / l1).sin()),
        )
        .unwrap();
        s.apply_pec();
        let out = apply_sub_semigroup(&s, Axis::X, SchemeKind::Exact, tau).unwrap();
        // (E2, H3) has σ = -1, so s = +1: a = cos θ, b = -sin θ.
        let (sin, cos) = (kappa * tau).sin_cos();
        let mut expect = StateZ::zeros(g);
        expect
            .set_field(
                Component::E2,
                &ScalarField::from_fn(g, |x, _, _| cos * (PI * x / l1).sin()),
            )
            .unwrap();
        expect
            .set_field(
                Component::H3,
                &ScalarField::from_fn(g, |x, _, _| -sin * (PI * x / l1).cos()),
            )
            .unwrap();
        expect.apply_pec();
        assert!(out.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn semigroups_agree_with_taylor_for_small_steps() {
        let g = grid();
        let s = random_state(g, 4);
        let tau = 1e-4;
        for axis in Axis::ALL {
            let m1 = discrete_curl_alpha(&s, axis).unwrap();
            let m2 = discrete_curl_alpha(&m1, axis).unwrap();
            let mut taylor = s.clone();
            taylor.add_scaled(tau, &m1).unwrap();
            taylor.add_scaled(0.5 * tau * tau, &m2).unwrap();
            for scheme in SchemeKind::ALL {
                let out = apply_sub_semigroup(&s, axis, scheme, tau).unwrap();
                let tol = match scheme {
                    SchemeKind::Exact | SchemeKind::Midpoint => 1e-8,
                    // The second-order terms differ.
                    SchemeKind::ImplicitEuler => tau * tau * m2.max_abs() * 0.6 + 1e-8,
                };
                assert!(
                    out.max_abs_diff(&taylor) < tol,
                    "{axis:?} {scheme}: {}",
                    out.max_abs_diff(&taylor)
                );
            }
        }
    }

    #[test]
    fn norms_under_each_scheme() {
        let g = grid();
        let s = random_state(g, 8);
        let before = norm_l2(&s);
        for axis in Axis::ALL {
            let ex = apply_sub_semigroup(&s, axis, SchemeKind::Exact, 0.4).unwrap();
            let mp = apply_sub_semigroup(&s, axis, SchemeKind::Midpoint, 0.4).unwrap();
            let ie = apply_sub_semigroup(&s, axis, SchemeKind::ImplicitEuler, 0.4).unwrap();
            assert!((norm_l2(&ex) - before).abs() < 1e-11 * before);
            assert!((norm_l2(&mp) - before).abs() < 1e-11 * before);
            assert!(norm_l2(&ie) < before);
        }
    }

    #[test]
    fn inconsistent_state_is_rejected() {
        let g = grid();
        let mut s = random_state(g, 2);
        s.component_mut(Component::E2)[0] = 1.0;
        assert!(matches!(
            apply_sub_semigroup(&s, Axis::X, SchemeKind::Exact, 0.1),
            Err(Error::BoundaryConsistency(_))
        ));
    }

    #[test]
    fn shift_adds_the_weighted_increment() {
        let g = grid();
        let spec = NoiseSpec::new([2.0, 0.0, 0.0], [0.0; 3], 1.0, 2, 5).unwrap();
        let basis = ModeBasis::new(g, 2).unwrap();
        let lat = sample_lattice(&spec, 0, 1.0, 4).unwrap();
        let inc = increment_field(&lat, &basis, &spec, 4, 1).unwrap();
        let s = random_state(g, 3);
        let out = apply_stochastic_shift(&s, 1, &inc, &spec, SchemeKind::Exact, 0.25).unwrap();
        for c in Component::ALL {
            for (i, (a, b)) in out.component(c).iter().zip(s.component(c)).enumerate() {
                let expect = if c == Component::E1 {
                    b + 2.0 * inc.field.values()[i]
                } else {
                    *b
                };
                assert_eq!(*a, expect);
            }
        }
        let zero = NoiseIncrement::zero(g, 2);
        assert_eq!(
            apply_stochastic_shift(&s, 2, &zero, &spec, SchemeKind::Midpoint, 0.1).unwrap(),
            s
        );
        assert!(matches!(
            apply_stochastic_shift(&s, 4, &zero, &spec, SchemeKind::Exact, 0.1),
            Err(Error::Indexing(_))
        ));
    }

    #[test]
    fn shift_commutes_with_the_matching_semigroup() {
        let g = grid();
        let spec = NoiseSpec::new([1.0, -0.5, 0.3], [0.7, 0.2, -1.1], 1.0, 2, 5).unwrap();
        let basis = ModeBasis::new(g, 2).unwrap();
        let lat = sample_lattice(&spec, 1, 1.0, 2).unwrap();
        let inc = increment_field(&lat, &basis, &spec, 2, 0).unwrap();
        let s = random_state(g, 6);
        for j in 1..=3 {
            let axis = Axis::ALL[j - 1];
            for scheme in SchemeKind::ALL {
                let a = apply_sub_semigroup(
                    &apply_stochastic_shift(&s, j, &inc, &spec, scheme, 0.5).unwrap(),
                    axis,
                    scheme,
                    0.5,
                )
                .unwrap();
                let b = apply_stochastic_shift(
                    &apply_sub_semigroup(&s, axis, scheme, 0.5).unwrap(),
                    j,
                    &inc,
                    &spec,
                    scheme,
                    0.5,
                )
                .unwrap();
                assert!(a.max_abs_diff(&b) <= 1e-12);
            }
        }
    }

    #[test]
    fn sub_flow_of_zero_is_zero() {
        let g = grid();
        let spec = NoiseSpec::silent();
        let z = StateZ::zeros(g);
        for scheme in SchemeKind::ALL {
            for j in 1..=3 {
                let out = sub_flow(&z, j, scheme, 0.1, &NoiseIncrement::zero(g, 1), &spec).unwrap();
                assert_eq!(out, z);
            }
        }
    }
}
