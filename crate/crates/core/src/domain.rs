//! Uniform tensor grids on intervals and rectangles, the Dirichlet
//! finite-difference Laplacian, quadrature and the discrete L², H¹₀ and H⁻¹
//! norms.
//!
//! Boundary values are never stored: every field lives on interior nodes and
//! the homogeneous Dirichlet condition enters through the stencil. Interior
//! nodes are numbered `i + nx * j` in 2D.

use std::f64::consts::PI;

use crate::error::{Result, WaveError};
use crate::linalg::{BandedLu, BandedMatrix};

/// Interior nodes of a uniform grid on `(0, extent[0])` or `(0, extent[0]) x (0, extent[1])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    extent: [f64; 2],
    n: [usize; 2],
}

impl SpatialGrid {
    pub fn new_1d(extent: f64, n: usize) -> Result<Self> {
        Self::new(1, [extent, 1.0], [n, 1])
    }

    pub fn new_2d(extent: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Self::new(2, extent, n)
    }

    fn new(dim: usize, extent: [f64; 2], n: [usize; 2]) -> Result<Self> {
        for axis in 0..dim {
            if n[axis] < 2 {
                return Err(WaveError::InvalidGrid(format!(
                    "axis {axis} needs at least 2 interior points, got {}",
                    n[axis]
                )));
            }
            if !(extent[axis] > 0.0 && extent[axis].is_finite()) {
                return Err(WaveError::InvalidGrid(format!(
                    "axis {axis} extent must be positive, got {}",
                    extent[axis]
                )));
            }
        }
        Ok(Self { dim, extent, n })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn points(&self, axis: usize) -> usize {
        self.n[axis]
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.n[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mesh width along `axis`: `extent / (n + 1)`.
    pub fn dx(&self, axis: usize) -> f64 {
        self.extent[axis] / (self.n[axis] + 1) as f64
    }

    /// Quadrature weight of one interior node (`Δx` or `Δx Δy`).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.dx(a)).product()
    }

    /// Coordinates of node `idx`; the second entry is 0 in 1D.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let nx = self.n[0];
        let i = idx % nx;
        let j = idx / nx;
        let x = (i + 1) as f64 * self.dx(0);
        let y = if self.dim == 2 {
            (j + 1) as f64 * self.dx(1)
        } else {
            0.0
        };
        [x, y]
    }

    /// Grid with every mesh width halved (`n -> 2n + 1`).
    pub fn refined(&self) -> Self {
        let mut n = self.n;
        for axis in 0..self.dim {
            n[axis] = 2 * n[axis] + 1;
        }
        Self { n, ..*self }
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(WaveError::ShapeMismatch(format!(
                "field has {} values, grid has {} interior points",
                v.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Half-bandwidth of the Laplacian in the natural node ordering.
    pub fn bandwidth(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            self.n[0]
        }
    }
}

/// Uniform nodes `t_k = k Δt`, `k = 0..=m`, on `[0, T_h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(WaveError::InvalidGrid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if steps < 2 {
            return Err(WaveError::InvalidGrid(format!(
                "need at least 2 time steps, got {steps}"
            )));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `m`; there are `m + 1` nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// Trapezoidal weight `ω_k` (1/2 at both ends, 1 elsewhere).
    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.steps {
            0.5
        } else {
            1.0
        }
    }

    pub fn refined(&self) -> Self {
        Self {
            steps: self.steps * 2,
            ..*self
        }
    }

    /// Same step size on a horizon `factor` times longer.
    pub fn extended(&self, factor: usize) -> Self {
        Self {
            horizon: self.horizon * factor as f64,
            steps: self.steps * factor,
        }
    }
}

/// Values at the interior nodes of a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn zeros(g: &SpatialGrid) -> Self {
        Self(vec![0.0; g.len()])
    }

    pub fn from_fn(g: &SpatialGrid, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        Self((0..g.len()).map(|i| f(g.coords(i))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One spatial slice per time node, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    space: usize,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(g: &SpatialGrid, tg: &TimeGrid) -> Self {
        Self {
            space: g.len(),
            data: vec![0.0; g.len() * tg.nodes()],
        }
    }

    pub fn constant(g: &SpatialGrid, tg: &TimeGrid, c: f64) -> Self {
        Self {
            space: g.len(),
            data: vec![c; g.len() * tg.nodes()],
        }
    }

    /// Samples `f(t, x)` at every node.
    pub fn from_fn(
        g: &SpatialGrid,
        tg: &TimeGrid,
        mut f: impl FnMut(f64, [f64; 2]) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(g.len() * tg.nodes());
        for k in 0..tg.nodes() {
            let t = tg.t(k);
            for i in 0..g.len() {
                data.push(f(t, g.coords(i)));
            }
        }
        Self {
            space: g.len(),
            data,
        }
    }

    pub fn from_slices(slices: Vec<Vec<f64>>) -> Result<Self> {
        let space = slices.first().map_or(0, Vec::len);
        if slices.iter().any(|s| s.len() != space) {
            return Err(WaveError::ShapeMismatch(
                "time slices have different lengths".into(),
            ));
        }
        Ok(Self {
            space,
            data: slices.concat(),
        })
    }

    pub fn space_len(&self) -> usize {
        self.space
    }

    pub fn time_len(&self) -> usize {
        if self.space == 0 {
            0
        } else {
            self.data.len() / self.space
        }
    }

    #[inline]
    pub fn slice(&self, k: usize) -> &[f64] {
        &self.data[k * self.space..(k + 1) * self.space]
    }

    #[inline]
    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.space..(k + 1) * self.space]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn scalar_slice(&self, k: usize) -> ScalarField {
        ScalarField(self.slice(k).to_vec())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.space == other.space && self.data.len() == other.data.len()
    }

    pub fn check_shape(&self, g: &SpatialGrid, tg: &TimeGrid, what: &str) -> Result<()> {
        if self.space != g.len() || self.data.len() != g.len() * tg.nodes() {
            return Err(WaveError::ShapeMismatch(format!(
                "{what}: expected {} x {} nodes, got {} x {}",
                tg.nodes(),
                g.len(),
                self.time_len(),
                self.space
            )));
        }
        Ok(())
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            space: self.space,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields of equal shape.
    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        assert!(self.same_shape(other), "zip_map on fields of different shape");
        Self {
            space: self.space,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Self) {
        assert!(self.same_shape(other), "axpy on fields of different shape");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// Field with the order of time slices reversed.
    pub fn reversed_in_time(&self) -> Self {
        let nt = self.time_len();
        let mut data = Vec::with_capacity(self.data.len());
        for k in (0..nt).rev() {
            data.extend_from_slice(self.slice(k));
        }
        Self {
            space: self.space,
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Writes `Δ_h v` into `out`.
pub fn laplacian_into(g: &SpatialGrid, v: &[f64], out: &mut [f64]) {
    let nx = g.n[0];
    let idx2 = 1.0 / (g.dx(0) * g.dx(0));
    if g.dim == 1 {
        for i in 0..nx {
            let left = if i > 0 { v[i - 1] } else { 0.0 };
            let right = if i + 1 < nx { v[i + 1] } else { 0.0 };
            out[i] = (left - 2.0 * v[i] + right) * idx2;
        }
        return;
    }
    let ny = g.n[1];
    let idy2 = 1.0 / (g.dx(1) * g.dx(1));
    for j in 0..ny {
        for i in 0..nx {
            let p = i + nx * j;
            let left = if i > 0 { v[p - 1] } else { 0.0 };
            let right = if i + 1 < nx { v[p + 1] } else { 0.0 };
            let down = if j > 0 { v[p - nx] } else { 0.0 };
            let up = if j + 1 < ny { v[p + nx] } else { 0.0 };
            out[p] = (left - 2.0 * v[p] + right) * idx2 + (down - 2.0 * v[p] + up) * idy2;
        }
    }
}

/// Banded matrix of `Δ_h`.
pub fn laplacian_matrix(g: &SpatialGrid) -> BandedMatrix {
    let nx = g.n[0];
    let mut a = BandedMatrix::zeros(g.len(), g.bandwidth());
    let idx2 = 1.0 / (g.dx(0) * g.dx(0));
    let idy2 = if g.dim == 2 {
        1.0 / (g.dx(1) * g.dx(1))
    } else {
        0.0
    };
    let ny = if g.dim == 2 { g.n[1] } else { 1 };
    for j in 0..ny {
        for i in 0..nx {
            let p = i + nx * j;
            a.set(p, p, -2.0 * idx2 - 2.0 * idy2);
            if i > 0 {
                a.set(p, p - 1, idx2);
            }
            if i + 1 < nx {
                a.set(p, p + 1, idx2);
            }
            if j > 0 {
                a.set(p, p - nx, idy2);
            }
            if j + 1 < ny {
                a.set(p, p + nx, idy2);
            }
        }
    }
    a
}

/// `Σ a_i b_i Δx^d` without shape checks.
#[inline]
pub fn dot_l2(g: &SpatialGrid, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * g.cell_volume()
}

/// Squared discrete gradient norm over all grid edges, boundary neighbours zero.
pub fn h10_sq(g: &SpatialGrid, v: &[f64]) -> f64 {
    let nx = g.n[0];
    let ny = if g.dim == 2 { g.n[1] } else { 1 };
    let vol = g.cell_volume();
    let mut acc = 0.0;
    let dx = g.dx(0);
    for j in 0..ny {
        let row = &v[j * nx..(j + 1) * nx];
        let mut prev = 0.0;
        for &cur in row {
            let d = (cur - prev) / dx;
            acc += d * d;
            prev = cur;
        }
        let d = prev / dx;
        acc += d * d;
    }
    if g.dim == 2 {
        let dy = g.dx(1);
        for i in 0..nx {
            let mut prev = 0.0;
            for j in 0..ny {
                let cur = v[i + nx * j];
                let d = (cur - prev) / dy;
                acc += d * d;
                prev = cur;
            }
            let d = prev / dy;
            acc += d * d;
        }
    }
    acc * vol
}

pub fn laplacian_apply(v: &ScalarField, g: &SpatialGrid) -> Result<ScalarField> {
    g.check(&v.0)?;
    let mut out = vec![0.0; g.len()];
    laplacian_into(g, &v.0, &mut out);
    Ok(ScalarField(out))
}

pub fn inner_l2(a: &ScalarField, b: &ScalarField, g: &SpatialGrid) -> Result<f64> {
    g.check(&a.0)?;
    g.check(&b.0)?;
    Ok(dot_l2(g, &a.0, &b.0))
}

pub fn norm_l2(v: &ScalarField, g: &SpatialGrid) -> Result<f64> {
    inner_l2(v, v, g).map(f64::sqrt)
}

pub fn norm_h10(v: &ScalarField, g: &SpatialGrid) -> Result<f64> {
    g.check(&v.0)?;
    Ok(h10_sq(g, &v.0).sqrt())
}

/// Factored `-Δ_h`, reused for repeated H⁻¹ norms on one grid.
#[derive(Debug, Clone)]
pub struct NegLaplacianSolver {
    grid: SpatialGrid,
    lu: BandedLu,
}

impl NegLaplacianSolver {
    pub fn new(g: &SpatialGrid) -> Result<Self> {
        let mut a = laplacian_matrix(g);
        for i in 0..g.len() {
            let lo = i.saturating_sub(a.bandwidth());
            let hi = (i + a.bandwidth()).min(g.len() - 1);
            for j in lo..=hi {
                let v = a.get(i, j);
                a.set(i, j, -v);
            }
        }
        Ok(Self {
            grid: *g,
            lu: a.factorize()?,
        })
    }

    /// Solves `-Δ_h w = v`.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        self.lu.solve_in_place(&mut w);
        w
    }

    pub fn hminus1_sq(&self, v: &[f64]) -> f64 {
        let w = self.solve(v);
        dot_l2(&self.grid, v, &w).max(0.0)
    }

    pub fn hminus1(&self, v: &[f64]) -> f64 {
        self.hminus1_sq(v).sqrt()
    }
}

pub fn norm_hminus1(v: &ScalarField, g: &SpatialGrid) -> Result<f64> {
    g.check(&v.0)?;
    Ok(NegLaplacianSolver::new(g)?.hminus1(&v.0))
}

/// Smallest eigenvalue of `-Δ_h` along one axis: `(2/Δx²)(1 - cos(πΔx/L))`.
pub fn axis_min_eigenvalue(dx: f64, extent: f64) -> f64 {
    2.0 / (dx * dx) * (1.0 - (PI * dx / extent).cos())
}

/// Discrete Poincaré constant `1/λ_min(-Δ_h)`.
pub fn poincare_constant(g: &SpatialGrid) -> f64 {
    let lambda: f64 = (0..g.dim)
        .map(|a| axis_min_eigenvalue(g.dx(a), g.extent(a)))
        .sum();
    1.0 / lambda
}

/// `Σ_k ω_k Δt ⟨a(t_k), b(t_k)⟩`.
pub fn spacetime_inner(
    a: &SpaceTimeField,
    b: &SpaceTimeField,
    tg: &TimeGrid,
    g: &SpatialGrid,
) -> Result<f64> {
    a.check_shape(g, tg, "left operand")?;
    b.check_shape(g, tg, "right operand")?;
    Ok(spacetime_dot(a, b, tg, g))
}

/// Unchecked form of [`spacetime_inner`].
pub fn spacetime_dot(a: &SpaceTimeField, b: &SpaceTimeField, tg: &TimeGrid, g: &SpatialGrid) -> f64 {
    let dt = tg.dt();
    (0..tg.nodes())
        .map(|k| tg.weight(k) * dt * dot_l2(g, a.slice(k), b.slice(k)))
        .sum()
}

pub fn spacetime_norm_l2(w: &SpaceTimeField, tg: &TimeGrid, g: &SpatialGrid) -> Result<f64> {
    spacetime_inner(w, w, tg, g).map(|v| v.max(0.0).sqrt())
}

/// Discrete `L∞(Q)` norm.
pub fn norm_linf(w: &SpaceTimeField) -> f64 {
    w.max_abs()
}

/// Discrete `L²(0,T;L∞(Ω))` norm: trapezoidal time-sum of squared slice max-norms.
pub fn norm_l2_linf(w: &SpaceTimeField, tg: &TimeGrid) -> f64 {
    let dt = tg.dt();
    (0..w.time_len())
        .map(|k| {
            let m = w.slice(k).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            tg.weight(k) * dt * m * m
        })
        .sum::<f64>()
        .sqrt()
}

/// Discrete `L∞(0,T;L²(Ω))` norm.
pub fn norm_linf_l2(w: &SpaceTimeField, g: &SpatialGrid) -> f64 {
    (0..w.time_len())
        .map(|k| dot_l2(g, w.slice(k), w.slice(k)).sqrt())
        .fold(0.0, f64::max)
}

/// Control-space norm: max of the `L²(0,T;L∞)` and `L∞(Q)` surrogates.
pub fn norm_control(w: &SpaceTimeField, tg: &TimeGrid) -> f64 {
    norm_l2_linf(w, tg).max(norm_linf(w))
}

/// Forcing-space norm: max of the `L∞(0,T;L²)` and `L²(Q)` norms.
pub fn norm_forcing(w: &SpaceTimeField, tg: &TimeGrid, g: &SpatialGrid) -> f64 {
    norm_linf_l2(w, g).max(spacetime_dot(w, w, tg, g).max(0.0).sqrt())
}
