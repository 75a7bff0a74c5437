//! Cuboid geometry, collocated node grids, six-component field states and the
//! discrete first-order operators (split curl, full curl, divergence) acting on them.
//!
//! Every component lives on the same `(n1+1) x (n2+1) x (n3+1)` node lattice.
//! Perfect-conductor boundary conditions are expressed as masks: tangential
//! `E` and normal `H` vanish on each face. The split curl operators read and
//! write through that mask, so on boundary-consistent states they are exactly
//! skew-adjoint in the trapezoidal inner product.

use crate::error::{Error, Result};

/// Smallest number of intervals per axis supported by the stencils.
pub const MIN_INTERVALS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Axis::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// One of the six field components of `Z = (E, H)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    E1,
    E2,
    E3,
    H1,
    H2,
    H3,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::E1,
        Component::E2,
        Component::E3,
        Component::H1,
        Component::H2,
        Component::H3,
    ];

    pub fn index(self) -> usize {
        match self {
            Component::E1 => 0,
            Component::E2 => 1,
            Component::E3 => 2,
            Component::H1 => 3,
            Component::H2 => 4,
            Component::H3 => 5,
        }
    }

    pub fn electric(direction: usize) -> Component {
        Component::ALL[direction]
    }

    pub fn magnetic(direction: usize) -> Component {
        Component::ALL[3 + direction]
    }

    pub fn is_electric(self) -> bool {
        self.index() < 3
    }

    /// Cartesian direction (0, 1 or 2) of the component.
    pub fn direction(self) -> usize {
        self.index() % 3
    }

    /// Whether the PEC condition forces this component to zero on the faces
    /// normal to `axis`: tangential `E` and normal `H` vanish.
    pub fn vanishes_on(self, axis: Axis) -> bool {
        if self.is_electric() {
            self.direction() != axis.index()
        } else {
            self.direction() == axis.index()
        }
    }
}

/// Two components coupled by the one-dimensional wave system of a split curl:
/// `u' = sign * D v`, `v' = sign * D u`, with `u` vanishing on the faces normal
/// to the axis and `v` free there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledPair {
    pub dirichlet: Component,
    pub free: Component,
    pub sign: f64,
}

/// The two wave pairs moved by the split operator along `axis`.
pub fn coupled_pairs(axis: Axis) -> [CoupledPair; 2] {
    use Component::*;
    let pair = |dirichlet, free, sign| CoupledPair {
        dirichlet,
        free,
        sign,
    };
    match axis {
        Axis::X => [pair(E2, H3, -1.0), pair(E3, H2, 1.0)],
        Axis::Y => [pair(E1, H3, 1.0), pair(E3, H1, -1.0)],
        Axis::Z => [pair(E1, H2, -1.0), pair(E2, H1, 1.0)],
    }
}

/// Components carrying the noise in the subsystem split along `axis`
/// (`E_j` and `H_j` with `j` the axis index). The split operator leaves them untouched.
pub fn noise_components(axis: Axis) -> (Component, Component) {
    let j = axis.index();
    (Component::electric(j), Component::magnetic(j))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cuboid {
    lower: [f64; 3],
    upper: [f64; 3],
}

impl Cuboid {
    pub fn new(lower: [f64; 3], upper: [f64; 3]) -> Result<Self> {
        for j in 0..3 {
            if !(lower[j].is_finite() && upper[j].is_finite() && lower[j] < upper[j]) {
                return Err(Error::Config(format!(
                    "cuboid extent along axis {} is empty: [{}, {}]",
                    j + 1,
                    lower[j],
                    upper[j]
                )));
            }
        }
        Ok(Cuboid { lower, upper })
    }

    pub fn unit() -> Self {
        Cuboid {
            lower: [0.0; 3],
            upper: [1.0; 3],
        }
    }

    pub fn lower(&self) -> [f64; 3] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 3] {
        self.upper
    }

    pub fn length(&self, axis: Axis) -> f64 {
        self.upper[axis.index()] - self.lower[axis.index()]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [
            self.length(Axis::X),
            self.length(Axis::Y),
            self.length(Axis::Z),
        ]
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }
}

/// Collocated node grid on a cuboid with `n_j` uniform intervals per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    cuboid: Cuboid,
    n: [usize; 3],
}

impl GridSpec {
    pub fn new(cuboid: Cuboid, n: [usize; 3]) -> Result<Self> {
        if let Some(j) = (0..3).find(|&j| n[j] < MIN_INTERVALS) {
            return Err(Error::Stencil(format!(
                "axis {} has {} intervals, stencils need at least {}",
                j + 1,
                n[j],
                MIN_INTERVALS
            )));
        }
        Ok(GridSpec { cuboid, n })
    }

    /// Unit cube with `n` intervals on every axis.
    pub fn cube(n: usize) -> Result<Self> {
        GridSpec::new(Cuboid::unit(), [n; 3])
    }

    pub fn cuboid(&self) -> &Cuboid {
        &self.cuboid
    }

    pub fn intervals(&self, axis: Axis) -> usize {
        self.n[axis.index()]
    }

    pub fn shape(&self) -> [usize; 3] {
        self.n
    }

    pub fn nodes(&self, axis: Axis) -> usize {
        self.n[axis.index()] + 1
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        self.cuboid.length(axis) / self.n[axis.index()] as f64
    }

    pub fn node_count(&self) -> usize {
        (self.n[0] + 1) * (self.n[1] + 1) * (self.n[2] + 1)
    }

    /// Length of a flattened six-component state.
    pub fn state_len(&self) -> usize {
        6 * self.node_count()
    }

    pub fn stride(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => 1,
            Axis::Y => self.n[0] + 1,
            Axis::Z => (self.n[0] + 1) * (self.n[1] + 1),
        }
    }

    /// Flat node index; `x` varies fastest, `z` slowest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * (self.n[1] + 1) + j) * (self.n[0] + 1) + i
    }

    pub fn node(&self, index: usize) -> [usize; 3] {
        let nx = self.n[0] + 1;
        let ny = self.n[1] + 1;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Coordinate of node `i` along `axis` measured from the lower face.
    #[inline]
    pub fn local_coord(&self, axis: Axis, i: usize) -> f64 {
        i as f64 * self.spacing(axis)
    }

    pub fn coord(&self, axis: Axis, i: usize) -> f64 {
        self.cuboid.lower[axis.index()] + self.local_coord(axis, i)
    }

    /// Flat index of the first node of every grid line running along `axis`.
    pub fn line_starts(&self, axis: Axis) -> Vec<usize> {
        let [nx, ny, nz] = [self.n[0] + 1, self.n[1] + 1, self.n[2] + 1];
        let mut starts = Vec::with_capacity(self.node_count() / self.nodes(axis));
        match axis {
            Axis::X => {
                for k in 0..nz {
                    for j in 0..ny {
                        starts.push(self.index(0, j, k));
                    }
                }
            }
            Axis::Y => {
                for k in 0..nz {
                    for i in 0..nx {
                        starts.push(self.index(i, 0, k));
                    }
                }
            }
            Axis::Z => {
                for j in 0..ny {
                    for i in 0..nx {
                        starts.push(self.index(i, j, 0));
                    }
                }
            }
        }
        starts
    }

    /// One-dimensional trapezoidal weights along `axis`.
    pub fn axis_weights(&self, axis: Axis) -> Vec<f64> {
        let h = self.spacing(axis);
        let n = self.intervals(axis);
        (0..=n)
            .map(|i| if i == 0 || i == n { 0.5 * h } else { h })
            .collect()
    }

    /// Tensor-product trapezoidal quadrature weight of every node.
    pub fn weights(&self) -> Vec<f64> {
        let wx = self.axis_weights(Axis::X);
        let wy = self.axis_weights(Axis::Y);
        let wz = self.axis_weights(Axis::Z);
        let mut w = Vec::with_capacity(self.node_count());
        for &c in &wz {
            for &b in &wy {
                for &a in &wx {
                    w.push(a * b * c);
                }
            }
        }
        w
    }

    /// Whether node `[i, j, k]` lies on a face normal to `axis`.
    #[inline]
    pub fn on_face(&self, node: [usize; 3], axis: Axis) -> bool {
        let a = axis.index();
        node[a] == 0 || node[a] == self.n[a]
    }

    /// 0/1 mask per flattened state entry: 0 where PEC forces the value to vanish.
    pub fn pec_mask(&self) -> Vec<f64> {
        let nodes = self.node_count();
        let mut mask = vec![1.0; 6 * nodes];
        for c in Component::ALL {
            let base = c.index() * nodes;
            for idx in 0..nodes {
                let node = self.node(idx);
                if Axis::ALL
                    .iter()
                    .any(|&ax| c.vanishes_on(ax) && self.on_face(node, ax))
                {
                    mask[base + idx] = 0.0;
                }
            }
        }
        mask
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::Dimension(format!(
                "grids differ: {:?} vs {:?}",
                self.n, other.n
            )));
        }
        Ok(())
    }
}

/// Nodal values of one real field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Dimension(format!(
                "expected {} nodal values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f(x, y, z)` at the nodes, with coordinates measured from the lower corner.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for k in 0..grid.nodes(Axis::Z) {
            let z = grid.local_coord(Axis::Z, k);
            for j in 0..grid.nodes(Axis::Y) {
                let y = grid.local_coord(Axis::Y, j);
                for i in 0..grid.nodes(Axis::X) {
                    values.push(f(grid.local_coord(Axis::X, i), y, z));
                }
            }
        }
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(weighted_dot(&self.grid, &self.values, &other.values))
    }

    pub fn norm_l2(&self) -> f64 {
        weighted_dot(&self.grid, &self.values, &self.values).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add_scaled(&mut self, factor: f64, other: &ScalarField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

fn weighted_dot(grid: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    let wx = grid.axis_weights(Axis::X);
    let wy = grid.axis_weights(Axis::Y);
    let wz = grid.axis_weights(Axis::Z);
    let nx = wx.len();
    let mut total = 0.0;
    let mut offset = 0;
    for &c in &wz {
        for &b_w in &wy {
            let w_yz = b_w * c;
            let mut row = 0.0;
            for i in 0..nx {
                row += wx[i] * (a[offset + i] * b[offset + i]);
            }
            total += w_yz * row;
            offset += nx;
        }
    }
    total
}

/// The six-component state `Z = (E1, E2, E3, H1, H2, H3)`, flattened
/// component-major over the node lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct StateZ {
    grid: GridSpec,
    data: Vec<f64>,
}

impl StateZ {
    pub fn zeros(grid: GridSpec) -> Self {
        StateZ {
            grid,
            data: vec![0.0; grid.state_len()],
        }
    }

    pub fn from_flat(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.state_len() {
            return Err(Error::Dimension(format!(
                "expected {} state entries, got {}",
                grid.state_len(),
                data.len()
            )));
        }
        Ok(StateZ { grid, data })
    }

    pub fn from_fields(fields: [&ScalarField; 6]) -> Result<Self> {
        let grid = *fields[0].grid();
        let mut data = Vec::with_capacity(grid.state_len());
        for f in fields {
            grid.check_same(f.grid())?;
            data.extend_from_slice(f.values());
        }
        Ok(StateZ { grid, data })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: Component) -> &[f64] {
        let n = self.grid.node_count();
        &self.data[c.index() * n..(c.index() + 1) * n]
    }

    pub fn component_mut(&mut self, c: Component) -> &mut [f64] {
        let n = self.grid.node_count();
        &mut self.data[c.index() * n..(c.index() + 1) * n]
    }

    pub fn field(&self, c: Component) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.component(c).to_vec(),
        }
    }

    pub fn set_field(&mut self, c: Component, field: &ScalarField) -> Result<()> {
        self.grid.check_same(field.grid())?;
        self.component_mut(c).copy_from_slice(field.values());
        Ok(())
    }

    /// Zeroes every entry the PEC condition forces to vanish.
    pub fn apply_pec(&mut self) {
        let g = self.grid;
        let nodes = g.node_count();
        let [nx, ny, nz] = [g.nodes(Axis::X), g.nodes(Axis::Y), g.nodes(Axis::Z)];
        for c in Component::ALL {
            let base = c.index() * nodes;
            for ax in Axis::ALL.into_iter().filter(|&ax| c.vanishes_on(ax)) {
                let last = g.intervals(ax);
                for face in [0, last] {
                    match ax {
                        Axis::X => {
                            for k in 0..nz {
                                for j in 0..ny {
                                    self.data[base + g.index(face, j, k)] = 0.0;
                                }
                            }
                        }
                        Axis::Y => {
                            for k in 0..nz {
                                for i in 0..nx {
                                    self.data[base + g.index(i, face, k)] = 0.0;
                                }
                            }
                        }
                        Axis::Z => {
                            for j in 0..ny {
                                for i in 0..nx {
                                    self.data[base + g.index(i, j, face)] = 0.0;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Largest magnitude among entries that PEC requires to vanish.
    pub fn pec_violation(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for c in Component::ALL {
            let values = self.component(c);
            for (idx, v) in values.iter().enumerate() {
                let node = g.node(idx);
                if Axis::ALL
                    .iter()
                    .any(|&ax| c.vanishes_on(ax) && g.on_face(node, ax))
                {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    pub fn is_boundary_consistent(&self, tol: f64) -> bool {
        self.pec_violation() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn add_scaled(&mut self, factor: f64, other: &StateZ) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn max_abs_diff(&self, other: &StateZ) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Boundary closure used by a first-derivative stencil on the first and last node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// `(u1 - u0)/h`: pairs with trapezoidal weights into a summation-by-parts
    /// operator. Second-order accurate on odd (sine-type) profiles.
    SummationByParts,
    /// `(-3u0 + 4u1 - u2)/(2h)`.
    SecondOrder,
}

/// First derivative along one line of `len` nodes with spacing `h`, reading
/// `src[start + i*stride]`, writing `dst[start + i*stride]`, scaled by `factor`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn line_derivative(
    src: &[f64],
    dst: &mut [f64],
    start: usize,
    stride: usize,
    len: usize,
    h: f64,
    factor: f64,
    closure: Closure,
) {
    let at = |i: usize| src[start + i * stride];
    let half = 0.5 * factor / h;
    for i in 1..len - 1 {
        dst[start + i * stride] = half * (at(i + 1) - at(i - 1));
    }
    let last = len - 1;
    let (d0, dn) = match closure {
        Closure::SummationByParts => (
            factor * (at(1) - at(0)) / h,
            factor * (at(last) - at(last - 1)) / h,
        ),
        Closure::SecondOrder => (
            half * (-3.0 * at(0) + 4.0 * at(1) - at(2)),
            half * (3.0 * at(last) - 4.0 * at(last - 1) + at(last - 2)),
        ),
    };
    dst[start] = d0;
    dst[start + last * stride] = dn;
}

/// `factor * d/d(axis)` of a nodal array over the whole grid.
pub(crate) fn derivative(
    grid: &GridSpec,
    axis: Axis,
    src: &[f64],
    dst: &mut [f64],
    factor: f64,
    closure: Closure,
) {
    let stride = grid.stride(axis);
    let len = grid.nodes(axis);
    let h = grid.spacing(axis);
    for start in grid.line_starts(axis) {
        line_derivative(src, dst, start, stride, len, h, factor, closure);
    }
}

/// Split Maxwell operator `M_axis = [[0, curl_axis], [-curl_axis, 0]]` applied to `state`.
///
/// The input is read through the PEC mask and the output is masked, so the
/// operator is a map on boundary-consistent states. Components outside the two
/// coupled pairs of `axis` come out zero.
pub fn discrete_curl_alpha(state: &StateZ, axis: Axis) -> Result<StateZ> {
    let grid = *state.grid();
    let mut input = state.clone();
    input.apply_pec();
    let mut out = StateZ::zeros(grid);
    let nodes = grid.node_count();
    for pair in coupled_pairs(axis) {
        let (u, v) = (pair.dirichlet.index() * nodes, pair.free.index() * nodes);
        let mut buf = vec![0.0; nodes];
        derivative(
            &grid,
            axis,
            &input.data[v..v + nodes],
            &mut buf,
            pair.sign,
            Closure::SummationByParts,
        );
        out.data[u..u + nodes].copy_from_slice(&buf);
        derivative(
            &grid,
            axis,
            &input.data[u..u + nodes],
            &mut buf,
            pair.sign,
            Closure::SummationByParts,
        );
        out.data[v..v + nodes].copy_from_slice(&buf);
    }
    out.apply_pec();
    Ok(out)
}

/// Full Maxwell operator `M = M_x + M_y + M_z`.
pub fn discrete_curl(state: &StateZ) -> Result<StateZ> {
    let mut total = discrete_curl_alpha(state, Axis::X)?;
    for axis in [Axis::Y, Axis::Z] {
        total.add_scaled(1.0, &discrete_curl_alpha(state, axis)?)?;
    }
    Ok(total)
}

/// Central-difference divergence with second-order one-sided closures at the faces.
pub fn discrete_div(field: (&ScalarField, &ScalarField, &ScalarField)) -> Result<ScalarField> {
    let grid = *field.0.grid();
    grid.check_same(field.1.grid())?;
    grid.check_same(field.2.grid())?;
    let mut out = ScalarField::zeros(grid);
    let mut buf = vec![0.0; grid.node_count()];
    for (axis, comp) in [(Axis::X, field.0), (Axis::Y, field.1), (Axis::Z, field.2)] {
        derivative(
            &grid,
            axis,
            comp.values(),
            &mut buf,
            1.0,
            Closure::SecondOrder,
        );
        for (o, b) in out.values.iter_mut().zip(&buf) {
            *o += b;
        }
    }
    Ok(out)
}

/// Divergence of the electric part of a state.
pub fn electric_divergence(state: &StateZ) -> Result<ScalarField> {
    discrete_div((
        &state.field(Component::E1),
        &state.field(Component::E2),
        &state.field(Component::E3),
    ))
}

/// Trapezoidal approximation of `∫_D a·b dx` over all six components.
pub fn inner_l2(a: &StateZ, b: &StateZ) -> Result<f64> {
    a.grid.check_same(&b.grid)?;
    let nodes = a.grid.node_count();
    Ok((0..6)
        .map(|c| {
            let r = c * nodes..(c + 1) * nodes;
            weighted_dot(&a.grid, &a.data[r.clone()], &b.data[r])
        })
        .sum())
}

pub fn norm_l2(a: &StateZ) -> f64 {
    // Same grid by construction.
    inner_l2(a, a).unwrap_or(f64::NAN).max(0.0).sqrt()
}

/// Squared discrete norm, the discrete energy `‖Z‖²`.
pub fn energy(a: &StateZ) -> f64 {
    inner_l2(a, a).unwrap_or(f64::NAN)
}
