//! Uniform cell-centred discretisation of the phase space `[0, 2π) × [−π, π)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Map `x` into the canonical periodic interval `[0, 2π)`.
pub fn wrap_x(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("wrap_x: non-finite input {x}")));
    }
    Ok(wrap_period(x, 0.0))
}

/// Map `v` into the canonical periodic interval `[−π, π)`.
pub fn wrap_v(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("wrap_v: non-finite input {v}")));
    }
    Ok(wrap_period(v, -PI))
}

/// Reduce `y` into `[lo, lo + 2π)`. Callers guarantee finiteness.
#[inline]
pub(crate) fn wrap_period(y: f64, lo: f64) -> f64 {
    let mut r = (y - lo).rem_euclid(TWO_PI);
    // rem_euclid can round up to exactly the period for tiny negative inputs
    if r >= TWO_PI {
        r = 0.0;
    }
    lo + r
}

/// Neumaier-compensated accumulator. Summation order is the caller's
/// iteration order, so results are reproducible run to run.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a sequence in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in iter {
        acc.add(x);
    }
    acc.value()
}

/// Periodic phase-space grid with `nx × nv` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    nx: usize,
    nv: usize,
    dx: f64,
    dv: f64,
}

impl PhaseGrid {
    pub const X_MIN: f64 = 0.0;
    pub const V_MIN: f64 = -PI;

    pub fn new(nx: usize, nv: usize) -> Result<Self> {
        if nx == 0 || nv == 0 {
            return Err(Error::InvalidArgument(format!("grid dimensions must be positive, got {nx}x{nv}")));
        }
        Ok(Self { nx, nv, dx: TWO_PI / nx as f64, dv: TWO_PI / nv as f64 })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    #[inline]
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn v_center(&self, j: usize) -> f64 {
        Self::V_MIN + (j as f64 + 0.5) * self.dv
    }

    /// Upper face of velocity cell `j`, i.e. `v_{j+1/2}`.
    #[inline]
    pub fn v_face(&self, j: usize) -> f64 {
        Self::V_MIN + (j as f64 + 1.0) * self.dv
    }

    pub fn cell_centers(&self) -> (Vec<f64>, Vec<f64>) {
        let xs = (0..self.nx).map(|i| self.x_center(i)).collect();
        let vs = (0..self.nv).map(|j| self.v_center(j)).collect();
        (xs, vs)
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dv
    }

    /// The periodic velocity axis this grid uses.
    pub fn velocity_axis(&self) -> VelocityAxis {
        VelocityAxis::torus(self.nv).expect("nv validated at construction")
    }
}

/// Free function form of [`PhaseGrid::cell_centers`].
pub fn cell_centers(grid: &PhaseGrid) -> (Vec<f64>, Vec<f64>) {
    grid.cell_centers()
}

/// How the velocity interval closes up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// `V` is a circle; fluxes wrap.
    Periodic,
    /// Bounded `V` with zero flux at both ends.
    Neumann,
}

/// Uniform cell-centred velocity discretisation used by the elliptic solve
/// and by the marginal quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityAxis {
    v_min: f64,
    v_max: f64,
    n: usize,
    boundary: Boundary,
}

impl VelocityAxis {
    pub fn new(v_min: f64, v_max: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("velocity axis needs at least one cell".into()));
        }
        if !(v_min.is_finite() && v_max.is_finite() && v_max > v_min) {
            return Err(Error::InvalidArgument(format!("invalid velocity window [{v_min}, {v_max}]")));
        }
        if boundary == Boundary::Periodic && ((v_max - v_min) - TWO_PI).abs() > 1e-12 {
            return Err(Error::InvalidArgument("periodic velocity axis must span exactly 2π".into()));
        }
        Ok(Self { v_min, v_max, n, boundary })
    }

    /// `[−π, π)` with periodic wrap.
    pub fn torus(n: usize) -> Result<Self> {
        Self::new(-PI, PI, n, Boundary::Periodic)
    }

    /// Truncated window `[lo, hi]` with zero-flux ends.
    pub fn window(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(lo, hi, n, Boundary::Neumann)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dv(&self) -> f64 {
        (self.v_max - self.v_min) / self.n as f64
    }

    #[inline]
    pub fn center(&self, j: usize) -> f64 {
        self.v_min + (j as f64 + 0.5) * self.dv()
    }

    /// Face `k` for `k = 0..=n`; face 0 is `v_min`.
    #[inline]
    pub fn face(&self, k: usize) -> f64 {
        self.v_min + k as f64 * self.dv()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.center(j)).collect()
    }
}

/// Cell-averaged density values, row = x index, column = v index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityArray {
    grid: PhaseGrid,
    values: Vec<f64>,
}

impl DensityArray {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self { grid, values: vec![0.0; grid.nx * grid.nv] }
    }

    pub fn filled(grid: PhaseGrid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.nx * grid.nv] }
    }

    /// Wrap row-major values (x outer, v inner). Rejects non-finite entries.
    pub fn from_values(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nx * grid.nv {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for a {}x{} grid, got {}",
                grid.nx * grid.nv,
                grid.nx,
                grid.nv,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite density value at flat index {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f` at every cell centre.
    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.nx * grid.nv);
        for i in 0..grid.nx {
            let x = grid.x_center(i);
            for j in 0..grid.nv {
                values.push(f(x, grid.v_center(j)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &PhaseGrid {
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nv + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.values[i * self.grid.nv + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nv = self.grid.nv;
        &self.values[i * nv..(i + 1) * nv]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Total mass `Σ values·dx·dv`, row-major compensated sum.
    pub fn integrate(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) * self.grid.cell_area()
    }

    /// Mass of x-column `i`, i.e. `Σ_j values[i, j]·dv` (the discrete velocity marginal).
    pub fn column_mass(&self, i: usize) -> f64 {
        compensated_sum(self.row(i).iter().copied()) * self.grid.dv
    }

    /// Periodic bilinear interpolation between cell centres.
    pub fn interpolate(&self, x: f64, v: f64) -> f64 {
        let g = &self.grid;
        let sx = (wrap_period(x, 0.0) / g.dx) - 0.5;
        let sv = ((wrap_period(v, -PI) + PI) / g.dv) - 0.5;
        let (i0, wx) = split_index(sx, g.nx);
        let (j0, wv) = split_index(sv, g.nv);
        let i1 = (i0 + 1) % g.nx;
        let j1 = (j0 + 1) % g.nv;
        let a = self.get(i0, j0) * (1.0 - wv) + self.get(i0, j1) * wv;
        let b = self.get(i1, j0) * (1.0 - wv) + self.get(i1, j1) * wv;
        a * (1.0 - wx) + b * wx
    }
}

/// Split a fractional cell coordinate into a periodic base index and weight.
#[inline]
pub(crate) fn split_index(s: f64, n: usize) -> (usize, f64) {
    let fl = s.floor();
    let w = s - fl;
    let i = (fl as i64).rem_euclid(n as i64) as usize;
    (i, w)
}

/// Free function form of [`DensityArray::integrate`].
pub fn integrate(arr: &DensityArray) -> f64 {
    arr.integrate()
}
