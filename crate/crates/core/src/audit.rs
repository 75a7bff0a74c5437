//! Dense matrix oracles on tiny grids.
//!
//! Every operator is assembled by applying the matrix-free routine to all basis
//! states, so the checks here exercise exactly the code paths used by the
//! solver. Flattening is component-major `(E1, E2, E3, H1, H2, H3)`, then
//! `z, y, x` node order, matching [`StateZ::as_slice`].

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{discrete_curl_alpha, Axis, GridSpec, StateZ};
use crate::noise::{NoiseIncrement, NoiseSpec};
use crate::stepper::SplitOrder;
use crate::subflow::{SchemeKind, SubflowPlan};

/// Largest flattened state dimension accepted by the dense routines.
pub const DIMENSION_CAP: usize = 1000;

pub const SKEW_TOL: f64 = 1e-10;
pub const SYMPLECTIC_TOL: f64 = 1e-10;
pub const IE_SYMPLECTIC_FLOOR: f64 = 1e-3;
pub const UNIT_CIRCLE_TOL: f64 = 1e-8;

/// Fewest quadrature substeps accepted by [`oracle_mild_step`].
pub const MIN_SUBSTEPS: usize = 64;

/// Multi-symplectic matrices in the ordering `u = (H1, H2, H3, E1, E2, E3)`.
pub mod multisymplectic {
    pub type Mat6 = [[f64; 6]; 6];

    const D1: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]];
    const D2: [[f64; 3]; 3] = [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
    const D3: [[f64; 3]; 3] = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];

    /// `F = [[0, Id], [-Id, 0]]`.
    pub fn f() -> Mat6 {
        let mut m = [[0.0; 6]; 6];
        for i in 0..3 {
            m[i][i + 3] = 1.0;
            m[i + 3][i] = -1.0;
        }
        m
    }

    /// `K_j = diag(D_j, D_j)`, `j = 1, 2, 3`.
    pub fn k(j: usize) -> Mat6 {
        let d = match j {
            1 => D1,
            2 => D2,
            3 => D3,
            _ => panic!("K_j is defined for j = 1, 2, 3, got {j}"),
        };
        let mut m = [[0.0; 6]; 6];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] = d[r][c];
                m[r + 3][c + 3] = d[r][c];
            }
        }
        m
    }

    pub fn is_skew(m: &Mat6) -> bool {
        (0..6).all(|r| (0..6).all(|c| m[r][c] == -m[c][r]))
    }

    /// Hamiltonians of the `j`-th subsystem in multi-symplectic form.
    pub const H1_LABEL: &str = "H1[j](u) = 1/2 (E·curl_j E + H·curl_j H)";
    pub const H2_LABEL: &str = "H2[j](u) = λ1^j E_j + λ2^j H_j";
    pub const S_LABEL: &str = "S(u[j]) = 1/2 (E·D_j E + H·D_j H)";
}

/// A square matrix over flattened states, tagged with the operator it represents.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub tag: String,
    pub matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, state: &StateZ) -> Result<StateZ> {
        if state.as_slice().len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} acts on dimension {}, state has {}",
                self.tag,
                self.dim(),
                state.as_slice().len()
            )));
        }
        let x = nalgebra::DVector::from_column_slice(state.as_slice());
        let y = &self.matrix * x;
        StateZ::from_flat(*state.grid(), y.as_slice().to_vec())
    }

    /// `self · rhs`, applied first `rhs` then `self`.
    pub fn compose(&self, rhs: &DenseOperator) -> Result<DenseOperator> {
        if self.dim() != rhs.dim() {
            return Err(Error::Dimension(format!(
                "cannot compose {} with {}",
                self.tag, rhs.tag
            )));
        }
        Ok(DenseOperator {
            tag: format!("{}·{}", self.tag, rhs.tag),
            matrix: &self.matrix * &rhs.matrix,
        })
    }
}

/// Matrix-free split curl as seen by the audit. Test fixtures substitute faulty
/// implementations to check that the audit catches them.
pub trait CurlOperator {
    fn apply(&self, state: &StateZ, axis: Axis) -> Result<StateZ>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DiscreteCurl;

impl CurlOperator for DiscreteCurl {
    fn apply(&self, state: &StateZ, axis: Axis) -> Result<StateZ> {
        discrete_curl_alpha(state, axis)
    }
}

fn check_cap(grid: &GridSpec) -> Result<usize> {
    let dim = grid.state_len();
    if dim > DIMENSION_CAP {
        return Err(Error::Dimension(format!(
            "dense audit limited to {DIMENSION_CAP} unknowns, grid {:?} has {dim}",
            grid.shape()
        )));
    }
    Ok(dim)
}

fn operator_tag(axis: Option<Axis>) -> String {
    match axis {
        Some(a) => format!("M_{}", a.name()),
        None => "M".to_string(),
    }
}

/// Dense `M_axis`, or `M` when `axis` is `None`.
pub fn assemble_dense(grid: &GridSpec, axis: Option<Axis>) -> Result<DenseOperator> {
    assemble_dense_with(&DiscreteCurl, grid, axis)
}

pub fn assemble_dense_with(
    op: &dyn CurlOperator,
    grid: &GridSpec,
    axis: Option<Axis>,
) -> Result<DenseOperator> {
    let dim = check_cap(grid)?;
    let axes: Vec<Axis> = match axis {
        Some(a) => vec![a],
        None => Axis::ALL.to_vec(),
    };
    let mut m = DMatrix::zeros(dim, dim);
    let mut basis = StateZ::zeros(*grid);
    for col in 0..dim {
        basis.as_mut_slice()[col] = 1.0;
        let mut total = op.apply(&basis, axes[0])?;
        for &a in &axes[1..] {
            total.add_scaled(1.0, &op.apply(&basis, a)?)?;
        }
        m.column_mut(col).copy_from_slice(total.as_slice());
        basis.as_mut_slice()[col] = 0.0;
    }
    Ok(DenseOperator {
        tag: operator_tag(axis),
        matrix: m,
    })
}

/// Quadrature weight of every flattened coordinate.
pub fn state_weights(grid: &GridSpec) -> Vec<f64> {
    let w = grid.weights();
    let mut out = Vec::with_capacity(6 * w.len());
    for _ in 0..6 {
        out.extend_from_slice(&w);
    }
    out
}

/// `‖W A + Aᵀ W‖_max`.
pub fn weighted_skew_defect(a: &DenseOperator, weights: &[f64]) -> Result<f64> {
    let n = a.dim();
    if weights.len() != n {
        return Err(Error::Dimension(format!(
            "{} weights for a {n}-dimensional operator",
            weights.len()
        )));
    }
    let m = &a.matrix;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            worst = worst.max((weights[i] * m[(i, j)] + m[(j, i)] * weights[j]).abs());
        }
    }
    Ok(worst)
}

/// Matrix exponential (nalgebra's scaling and squaring around the degree-13 Padé approximant).
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "exponential of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "exponential of a non-finite matrix".into(),
        ));
    }
    let r = a.exp();
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(r)
}

/// Propagators available as dense matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagatorKind {
    /// `e^{τA}`.
    Exponential,
    /// `(Id - τA)^{-1}`.
    ImplicitEuler,
    /// `(Id - τA/2)^{-1}(Id + τA/2)`.
    Midpoint,
    /// `(Id - τA/2)^{-1}`, the midpoint noise filter.
    MidpointShift,
}

impl PropagatorKind {
    pub fn for_scheme(scheme: SchemeKind) -> Self {
        match scheme {
            SchemeKind::Exact => PropagatorKind::Exponential,
            SchemeKind::ImplicitEuler => PropagatorKind::ImplicitEuler,
            SchemeKind::Midpoint => PropagatorKind::Midpoint,
        }
    }

    fn label(self) -> &'static str {
        match self {
            PropagatorKind::Exponential => "exp",
            PropagatorKind::ImplicitEuler => "S_IE",
            PropagatorKind::Midpoint => "S_M",
            PropagatorKind::MidpointShift => "T_M",
        }
    }
}

fn resolvent_solve(a: &DMatrix<f64>, factor: f64, rhs: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let lhs = DMatrix::<f64>::identity(n, n) - a * factor;
    lhs.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular resolvent".into()))
}

/// Propagator of `kind` for the dense generator `a` over step `tau`.
pub fn propagator_of(a: &DenseOperator, kind: PropagatorKind, tau: f64) -> Result<DenseOperator> {
    let n = a.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let matrix = match kind {
        PropagatorKind::Exponential => expm(&(&a.matrix * tau))?,
        PropagatorKind::ImplicitEuler => resolvent_solve(&a.matrix, tau, id)?,
        PropagatorKind::Midpoint => {
            let rhs = &id + &a.matrix * (0.5 * tau);
            resolvent_solve(&a.matrix, 0.5 * tau, rhs)?
        }
        PropagatorKind::MidpointShift => resolvent_solve(&a.matrix, 0.5 * tau, id)?,
    };
    Ok(DenseOperator {
        tag: format!("{}({}, tau={tau})", kind.label(), a.tag),
        matrix,
    })
}

/// Dense propagator of `M_axis` (or `M`) over `tau`.
pub fn dense_propagator(
    grid: &GridSpec,
    kind: PropagatorKind,
    axis: Option<Axis>,
    tau: f64,
) -> Result<DenseOperator> {
    propagator_of(&assemble_dense(grid, axis)?, kind, tau)
}

/// Deterministic part of one splitting step as a dense product
/// `S_{α3} S_{α2} S_{α1}` in the stage order of `order`.
pub fn dense_composition(
    grid: &GridSpec,
    scheme: SchemeKind,
    order: SplitOrder,
    tau: f64,
) -> Result<DenseOperator> {
    let kind = PropagatorKind::for_scheme(scheme);
    let mut total: Option<DenseOperator> = None;
    for j in order.stages() {
        let stage = dense_propagator(grid, kind, Axis::from_index(j - 1), tau)?;
        total = Some(match total {
            None => stage,
            Some(t) => stage.compose(&t)?,
        });
    }
    total.ok_or_else(|| Error::Config("empty split order".into()))
}

/// Sub-propagator of the solver's [`SubflowPlan`] applied to every basis state.
///
/// Coordinates forced to zero by PEC are carried through unchanged.
pub fn plan_propagator(plan: &SubflowPlan, axis: Axis) -> Result<DenseOperator> {
    let grid = *plan.grid();
    let dim = check_cap(&grid)?;
    let mask = grid.pec_mask();
    let mut m = DMatrix::zeros(dim, dim);
    let mut basis = StateZ::zeros(grid);
    for col in 0..dim {
        if mask[col] == 0.0 {
            m[(col, col)] = 1.0;
            continue;
        }
        basis.as_mut_slice()[col] = 1.0;
        let mut out = basis.clone();
        plan.apply_semigroup(&mut out, axis)?;
        m.column_mut(col).copy_from_slice(out.as_slice());
        basis.as_mut_slice()[col] = 0.0;
    }
    Ok(DenseOperator {
        tag: format!(
            "{}(plan M_{}, tau={})",
            PropagatorKind::for_scheme(plan.scheme()).label(),
            axis.name(),
            plan.tau()
        ),
        matrix: m,
    })
}

/// Which skew form a propagator is tested against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormKind {
    /// `J = [[0, W], [-W, 0]]` pairing `E_d` with `H_d`.
    Canonical,
    /// `J_α = W M_α`, the form `∫ dZ ∧ M_α dZ` of the split Hamiltonian.
    CurlWeighted(Axis),
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormKind::Canonical => write!(f, "J"),
            FormKind::CurlWeighted(a) => write!(f, "J_{}", a.name()),
        }
    }
}

/// Skew bilinear form on flattened states.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub kind: FormKind,
    pub matrix: DMatrix<f64>,
}

impl CanonicalForm {
    pub fn canonical(grid: &GridSpec) -> Result<Self> {
        let dim = check_cap(grid)?;
        let w = state_weights(grid);
        let half = dim / 2;
        let mut j = DMatrix::zeros(dim, dim);
        for i in 0..half {
            j[(i, half + i)] = w[i];
            j[(half + i, i)] = -w[i];
        }
        Ok(CanonicalForm {
            kind: FormKind::Canonical,
            matrix: j,
        })
    }

    pub fn curl_weighted(grid: &GridSpec, axis: Axis) -> Result<Self> {
        let m = assemble_dense(grid, Some(axis))?;
        let w = state_weights(grid);
        let mut j = m.matrix;
        for (i, mut row) in j.row_iter_mut().enumerate() {
            row *= w[i];
        }
        Ok(CanonicalForm {
            kind: FormKind::CurlWeighted(axis),
            matrix: j,
        })
    }

    pub fn skew_defect(&self) -> f64 {
        (&self.matrix + self.matrix.transpose()).amax()
    }
}

/// `‖PᵀJP − J‖_max`.
pub fn symplectic_defect(p: &DenseOperator, j: &CanonicalForm) -> Result<f64> {
    let n = j.matrix.nrows();
    if p.matrix.nrows() != n || !p.matrix.is_square() {
        return Err(Error::Dimension(format!(
            "{} ({}x{}) against a form of dimension {}",
            p.tag,
            p.matrix.nrows(),
            p.matrix.ncols(),
            n
        )));
    }
    // Both forms are sparse, so J·P is accumulated row by row.
    let mut jp = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let x = j.matrix[(r, c)];
            if x != 0.0 {
                for k in 0..n {
                    jp[(r, k)] += x * p.matrix[(c, k)];
                }
            }
        }
    }
    let pjp = p.matrix.tr_mul(&jp);
    Ok((pjp - &j.matrix).amax())
}

/// Moduli of all eigenvalues of `p`.
///
/// The matrix is split into the diagonal blocks of its coupling graph first;
/// split propagators decouple into small per-line blocks.
pub fn eigenvalue_moduli(p: &DenseOperator) -> Vec<f64> {
    let n = p.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for c in 0..n {
        for r in 0..n {
            if r != c && p.matrix[(r, c)] != 0.0 {
                let (a, b) = (root(&mut parent, r), root(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        blocks.entry(r).or_default().push(i);
    }
    let mut out = Vec::with_capacity(n);
    for idx in blocks.values() {
        let m = idx.len();
        let block = DMatrix::from_fn(m, m, |r, c| p.matrix[(idx[r], idx[c])]);
        out.extend(block.complex_eigenvalues().iter().map(|z| z.norm()));
    }
    out
}

/// Reference one step `e^{τM} z0 + Σ_r e^{(τ - rδ)M} λ ΔW_r`, `δ = τ/R`, with the
/// stochastic convolution by left-endpoint quadrature over the `R` substep
/// increments.
pub fn oracle_mild_step(
    z0: &StateZ,
    tau: f64,
    increments: &[NoiseIncrement],
    spec: &NoiseSpec,
) -> Result<StateZ> {
    let full = assemble_dense(z0.grid(), None)?;
    oracle_mild_step_with(&full, z0, tau, increments, spec)
}

/// [`oracle_mild_step`] with a preassembled `M`.
pub fn oracle_mild_step_with(
    full: &DenseOperator,
    z0: &StateZ,
    tau: f64,
    increments: &[NoiseIncrement],
    spec: &NoiseSpec,
) -> Result<StateZ> {
    let grid = *z0.grid();
    let r = increments.len();
    if r < MIN_SUBSTEPS {
        return Err(Error::Config(format!(
            "stochastic convolution needs at least {MIN_SUBSTEPS} substeps, got {r}"
        )));
    }
    if full.dim() != grid.state_len() {
        return Err(Error::Dimension(format!(
            "{} does not act on grid {:?}",
            full.tag,
            grid.shape()
        )));
    }
    let step = propagator_of(full, PropagatorKind::Exponential, tau / r as f64)?;
    let mut acc = nalgebra::DVector::from_column_slice(z0.as_slice());
    let nodes = grid.node_count();
    for inc in increments {
        if inc.field.grid() != &grid {
            return Err(Error::Dimension(
                "noise increment lives on a different grid".into(),
            ));
        }
        let dw = inc.field.values();
        for (j, axis) in Axis::ALL.into_iter().enumerate() {
            let (e, h) = crate::grid::noise_components(axis);
            for (lam, c) in [(spec.lambda1[j], e), (spec.lambda2[j], h)] {
                if lam != 0.0 {
                    let base = c.index() * nodes;
                    for (i, w) in dw.iter().enumerate() {
                        acc[base + i] += lam * w;
                    }
                }
            }
        }
        acc = &step.matrix * acc;
    }
    let mut out = StateZ::from_flat(grid, acc.as_slice().to_vec())?;
    out.apply_pec();
    Ok(out)
}

/// How an audit line is judged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Criterion {
    AtMost(f64),
    AtLeast(f64),
    /// Exactly zero.
    Exact,
    Informational,
}

impl Criterion {
    pub fn holds(self, value: f64) -> bool {
        match self {
            Criterion::AtMost(t) => value <= t,
            Criterion::AtLeast(t) => value >= t,
            Criterion::Exact => value == 0.0,
            Criterion::Informational => true,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::AtMost(t) => write!(f, "<= {t:e}"),
            Criterion::AtLeast(t) => write!(f, ">= {t:e}"),
            Criterion::Exact => write!(f, "== 0"),
            Criterion::Informational => write!(f, "info"),
        }
    }
}

/// Category of an audit line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    ConstantSkew,
    WeightedSkew,
    Symplectic(FormKind),
    Spectrum,
    CrossImplementation,
}

#[derive(Clone, Debug)]
pub struct AuditLine {
    pub tag: String,
    pub kind: CheckKind,
    pub tau: Option<f64>,
    pub defect: f64,
    pub criterion: Criterion,
}

impl AuditLine {
    pub fn passed(&self) -> bool {
        self.criterion.holds(self.defect)
    }
}

impl fmt::Display for AuditLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tau = self.tau.map_or_else(|| "-".to_string(), |t| format!("{t}"));
        let verdict = match (self.criterion, self.passed()) {
            (Criterion::Informational, _) => "info",
            (_, true) => "ok",
            (_, false) => "FAIL",
        };
        write!(
            f,
            "{} tau={} defect={:.3e} [{}] {}",
            self.tag, tau, self.defect, self.criterion, verdict
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub lines: Vec<AuditLine>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(AuditLine::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditLine> {
        self.lines.iter().filter(|l| !l.passed())
    }

    /// Lines whose tag starts with `prefix`.
    pub fn find<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a AuditLine> + 'a {
        self.lines.iter().filter(move |l| l.tag.starts_with(prefix))
    }

    fn push(
        &mut self,
        tag: String,
        kind: CheckKind,
        tau: Option<f64>,
        defect: f64,
        criterion: Criterion,
    ) {
        self.lines.push(AuditLine {
            tag,
            kind,
            tau,
            defect,
            criterion,
        });
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Step sizes used by [`run_audit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditSettings {
    pub tau: f64,
    pub tau_implicit: f64,
    pub spectra: bool,
}

impl Default for AuditSettings {
    fn default() -> Self {
        AuditSettings {
            tau: 0.1,
            tau_implicit: 0.1,
            spectra: true,
        }
    }
}

/// All structure checks on `grid` with the solver's own curl.
pub fn run_audit(grid: &GridSpec, settings: &AuditSettings) -> Result<AuditReport> {
    run_audit_with(&DiscreteCurl, grid, settings)
}

/// Structure checks with an arbitrary curl implementation.
///
/// Gated lines: exact skewness of `F` and `K_j`; weighted skewness of `M` and
/// each `M_α`; canonical symplecticity of the exponential and midpoint
/// sub-propagators. The implicit Euler defect and the curl-weighted forms are
/// reported without gating.
pub fn run_audit_with(
    op: &dyn CurlOperator,
    grid: &GridSpec,
    settings: &AuditSettings,
) -> Result<AuditReport> {
    let mut report = AuditReport::default();
    let fm = multisymplectic::f();
    report.push(
        "F".into(),
        CheckKind::ConstantSkew,
        None,
        mat6_skew_defect(&fm),
        Criterion::Exact,
    );
    for j in 1..=3 {
        report.push(
            format!("K_{j}"),
            CheckKind::ConstantSkew,
            None,
            mat6_skew_defect(&multisymplectic::k(j)),
            Criterion::Exact,
        );
    }

    let w = state_weights(grid);
    let full = assemble_dense_with(op, grid, None)?;
    report.push(
        full.tag.clone(),
        CheckKind::WeightedSkew,
        None,
        weighted_skew_defect(&full, &w)?,
        Criterion::AtMost(SKEW_TOL),
    );
    let canonical = CanonicalForm::canonical(grid)?;
    for axis in Axis::ALL {
        let m = assemble_dense_with(op, grid, Some(axis))?;
        report.push(
            m.tag.clone(),
            CheckKind::WeightedSkew,
            None,
            weighted_skew_defect(&m, &w)?,
            Criterion::AtMost(SKEW_TOL),
        );
        let mut curl_form = m.matrix.clone();
        for (i, mut row) in curl_form.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let curl_form = CanonicalForm {
            kind: FormKind::CurlWeighted(axis),
            matrix: curl_form,
        };
        let cases = [
            (
                PropagatorKind::Exponential,
                settings.tau,
                Criterion::AtMost(SYMPLECTIC_TOL),
            ),
            (
                PropagatorKind::Midpoint,
                settings.tau,
                Criterion::AtMost(SYMPLECTIC_TOL),
            ),
            (
                PropagatorKind::ImplicitEuler,
                settings.tau_implicit,
                Criterion::Informational,
            ),
        ];
        for (kind, tau, gate) in cases {
            let p = propagator_of(&m, kind, tau)?;
            let label = format!("{}(M_{})", kind.label(), axis.name());
            report.push(
                format!("symplectic {} {label}", canonical.kind),
                CheckKind::Symplectic(FormKind::Canonical),
                Some(tau),
                symplectic_defect(&p, &canonical)?,
                gate,
            );
            report.push(
                format!("symplectic {} {label}", curl_form.kind),
                CheckKind::Symplectic(curl_form.kind),
                Some(tau),
                symplectic_defect(&p, &curl_form)?,
                Criterion::Informational,
            );
            if settings.spectra {
                let moduli = eigenvalue_moduli(&p);
                let (defect, gate) = match kind {
                    PropagatorKind::ImplicitEuler => (
                        moduli.iter().fold(0.0f64, |m, z| m.max(z - 1.0)).max(0.0),
                        Criterion::AtMost(UNIT_CIRCLE_TOL),
                    ),
                    _ => (
                        moduli.iter().fold(0.0f64, |m, z| m.max((z - 1.0).abs())),
                        Criterion::AtMost(UNIT_CIRCLE_TOL),
                    ),
                };
                report.push(
                    format!("spectrum {label}"),
                    CheckKind::Spectrum,
                    Some(tau),
                    defect,
                    gate,
                );
            }
        }
    }
    Ok(report)
}

fn mat6_skew_defect(m: &multisymplectic::Mat6) -> f64 {
    (0..6)
        .flat_map(|r| (0..6).map(move |c| (m[r][c] + m[c][r]).abs()))
        .fold(0.0, f64::max)
}
