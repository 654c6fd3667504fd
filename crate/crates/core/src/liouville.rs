//! Strang-split finite-volume integrator for
//! `∂_t ρ + v ∂_x ρ + ∂_v(a ρ) = 0` on the periodic phase-space grid.
//!
//! Each sub-step is a conservative upwind update with MUSCL edge values and
//! minmod-limited slopes. A step is `v(dt/2) ∘ x(dt) ∘ v(dt/2)`, with the
//! field sampled at the midpoints `t + dt/4` and `t + 3dt/4` of the two
//! velocity half-steps.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::densities::DensitySpec;
use crate::error::{Error, Result};
use crate::field::{AccelerationField, FieldAtTime};
use crate::grid::{DensityArray, PhaseGrid};

/// Courant numbers may exceed 1 by this much before a sweep refuses to run.
const CFL_SLACK: f64 = 1e-12;

/// Two times closer than this are the same output time.
const TIME_EPS: f64 = 1e-12;

/// Edge values used by the upwind flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeScheme {
    /// `u_i ± σ_i/2`, advanced by forward Euler. Reproduces the reference
    /// torus diagnostics but is not TVD for Courant numbers above 2/3 and
    /// grows unstable under refinement (see README).
    #[default]
    Muscl,
    /// `u_i ± (1 − |ν|) σ_i/2` (MUSCL–Hancock); second order in time and
    /// TVD for `|ν| ≤ 1`.
    Hancock,
}

impl std::str::FromStr for EdgeScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "muscl" => Ok(Self::Muscl),
            "hancock" => Ok(Self::Hancock),
            other => Err(Error::Config(format!("unknown scheme '{other}' (expected muscl or hancock)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub cfl_x: f64,
    pub cfl_v: f64,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub scheme: EdgeScheme,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl_x: 0.8,
            cfl_v: 0.8,
            t_end: 1.0,
            output_times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            scheme: EdgeScheme::Muscl,
        }
    }
}

impl SolverConfig {
    /// Validated config. `0` and `t_end` are added to `output_times` if missing.
    pub fn new(cfl_x: f64, cfl_v: f64, t_end: f64, mut output_times: Vec<f64>) -> Result<Self> {
        for (name, c) in [("cfl_x", cfl_x), ("cfl_v", cfl_v)] {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1], got {c}")));
            }
        }
        if !(0.0..=1.0).contains(&t_end) {
            return Err(Error::InvalidArgument(format!("t_end must lie in [0, 1], got {t_end}")));
        }
        if let Some(bad) = output_times.iter().find(|&&t| !(0.0..=t_end).contains(&t)) {
            return Err(Error::InvalidArgument(format!("output time {bad} outside [0, {t_end}]")));
        }
        output_times.push(0.0);
        output_times.push(t_end);
        output_times.sort_by(f64::total_cmp);
        output_times.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS);
        Ok(Self { cfl_x, cfl_v, t_end, output_times, scheme: EdgeScheme::Muscl })
    }

    pub fn with_scheme(mut self, scheme: EdgeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    fn next_output_after(&self, t: f64) -> f64 {
        self.output_times.iter().copied().find(|&s| s > t + TIME_EPS).unwrap_or(self.t_end)
    }
}

#[derive(Debug, Clone)]
pub struct SimulationState {
    pub t: f64,
    pub rho: DensityArray,
    pub field: AccelerationField,
    pub step_count: usize,
}

impl SimulationState {
    pub fn new(rho: DensityArray, field: AccelerationField) -> Self {
        Self { t: 0.0, rho, field, step_count: 0 }
    }
}

/// One emitted snapshot of a run.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub rho: DensityArray,
    pub step_count: usize,
}

/// `minmod(a, b)`: the smaller magnitude when signs agree, else 0.
#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        a.min(b)
    } else if a < 0.0 && b < 0.0 {
        a.max(b)
    } else {
        0.0
    }
}

/// Time step from the dual CFL restriction, clipped to the next output time.
pub fn compute_dt(state: &SimulationState, config: &SolverConfig) -> f64 {
    let grid = state.rho.grid();
    let mut dt = config.cfl_x * grid.dx() / PI;
    let amax = state.field.max_abs_bound();
    if amax > 0.0 {
        dt = dt.min(config.cfl_v * grid.dv() / amax);
    }
    let remaining = config.next_output_after(state.t) - state.t;
    if remaining > 0.0 {
        dt.min(remaining)
    } else {
        dt
    }
}

/// Conservative periodic MUSCL/minmod update of one line.
///
/// `speed(k)` is the velocity at face `k + 1/2` (between cells `k` and
/// `k + 1`, wrapping), `lambda = dt / h`.
fn advect_line(u: &[f64], out: &mut [f64], lambda: f64, scheme: EdgeScheme, speed: impl Fn(usize) -> f64) {
    let n = u.len();
    if n == 1 {
        out[0] = u[0];
        return;
    }
    let slope = |i: usize| {
        let prev = u[(i + n - 1) % n];
        let next = u[(i + 1) % n];
        minmod(u[i] - prev, next - u[i])
    };
    let slopes: Vec<f64> = (0..n).map(slope).collect();
    let flux: Vec<f64> = (0..n)
        .map(|k| {
            let a = speed(k);
            let half = match scheme {
                EdgeScheme::Muscl => 0.5,
                EdgeScheme::Hancock => 0.5 * (1.0 - a.abs() * lambda),
            };
            if a >= 0.0 {
                a * (u[k] + half * slopes[k])
            } else {
                let r = (k + 1) % n;
                a * (u[r] - half * slopes[r])
            }
        })
        .collect();
    for i in 0..n {
        let left = flux[(i + n - 1) % n];
        out[i] = u[i] - lambda * (flux[i] - left);
    }
}

/// Full free-streaming step `ρ_t + v ρ_x = 0` along every velocity row.
pub fn sweep_x(rho: &DensityArray, dt: f64) -> Result<DensityArray> {
    sweep_x_with(rho, dt, EdgeScheme::Muscl)
}

pub fn sweep_x_with(rho: &DensityArray, dt: f64, scheme: EdgeScheme) -> Result<DensityArray> {
    let grid = *rho.grid();
    let (nx, nv) = (grid.nx(), grid.nv());
    let lambda = dt / grid.dx();
    let vmax = (0..nv).map(|j| grid.v_center(j).abs()).fold(0.0, f64::max);
    let courant = vmax * lambda.abs();
    if courant > 1.0 + CFL_SLACK {
        return Err(Error::Cfl { courant });
    }

    let values = rho.values();
    let columns: Vec<Vec<f64>> = (0..nv)
        .into_par_iter()
        .map(|j| {
            let v = grid.v_center(j);
            let line: Vec<f64> = (0..nx).map(|i| values[i * nv + j]).collect();
            let mut out = vec![0.0; nx];
            advect_line(&line, &mut out, lambda, scheme, |_| v);
            out
        })
        .collect();

    let mut next = vec![0.0; nx * nv];
    for (j, col) in columns.iter().enumerate() {
        for (i, &val) in col.iter().enumerate() {
            next[i * nv + j] = val;
        }
    }
    DensityArray::from_values(grid, next)
}

/// Velocity step `ρ_t + ∂_v(a ρ) = 0` along every x-column with the field
/// frozen at `t_mid`.
pub fn sweep_v(rho: &DensityArray, dt: f64, t_mid: f64, field: &AccelerationField) -> Result<DensityArray> {
    sweep_v_with(rho, dt, t_mid, field, EdgeScheme::Muscl)
}

pub fn sweep_v_with(
    rho: &DensityArray,
    dt: f64,
    t_mid: f64,
    field: &AccelerationField,
    scheme: EdgeScheme,
) -> Result<DensityArray> {
    let at = field.at_time(t_mid)?;
    sweep_v_at(rho, dt, &at, scheme)
}

fn sweep_v_at(rho: &DensityArray, dt: f64, at: &FieldAtTime<'_>, scheme: EdgeScheme) -> Result<DensityArray> {
    if at.is_zero() {
        return Ok(rho.clone());
    }
    let grid = *rho.grid();
    let (nx, nv) = (grid.nx(), grid.nv());
    let lambda = dt / grid.dv();

    let rows: Vec<(Vec<f64>, f64)> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let x = grid.x_center(i);
            let speeds: Vec<f64> = (0..nv).map(|j| at.eval(x, grid.v_face(j))).collect();
            let amax = speeds.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            let mut out = vec![0.0; nv];
            advect_line(rho.row(i), &mut out, lambda, scheme, |k| speeds[k]);
            (out, amax * lambda.abs())
        })
        .collect();

    let courant = rows.iter().map(|(_, c)| *c).fold(0.0, f64::max);
    if courant > 1.0 + CFL_SLACK {
        return Err(Error::Cfl { courant });
    }
    let next: Vec<f64> = rows.into_iter().flat_map(|(r, _)| r).collect();
    DensityArray::from_values(grid, next)
}

/// One Strang step of size `dt` from `state.t`.
pub fn strang_step_with_dt(state: &mut SimulationState, dt: f64, scheme: EdgeScheme) -> Result<()> {
    let t = state.t;
    let first = state.field.at_time((t + 0.25 * dt).clamp(0.0, 1.0))?;
    let half = sweep_v_at(&state.rho, 0.5 * dt, &first, scheme)?;
    let full = sweep_x_with(&half, dt, scheme)?;
    let second = state.field.at_time((t + 0.75 * dt).clamp(0.0, 1.0))?;
    state.rho = sweep_v_at(&full, 0.5 * dt, &second, scheme)?;
    state.t = t + dt;
    state.step_count += 1;
    Ok(())
}

/// One Strang step with the CFL-limited time step; returns the step taken.
pub fn strang_step(state: &mut SimulationState, config: &SolverConfig) -> Result<f64> {
    let dt = compute_dt(state, config);
    strang_step_with_dt(state, dt, config.scheme)?;
    Ok(dt)
}

/// Integrate from `ρ(0) = f` sampled at cell centres, emitting a snapshot
/// at every output time.
pub fn simulate(
    f: &DensitySpec,
    field: &AccelerationField,
    grid: &PhaseGrid,
    config: &SolverConfig,
) -> Result<Vec<Snapshot>> {
    let rho0 = DensityArray::from_fn(*grid, |x, v| f.eval(x, v));
    simulate_from(rho0, field, config)
}

/// As [`simulate`] from an explicit initial array.
pub fn simulate_from(rho0: DensityArray, field: &AccelerationField, config: &SolverConfig) -> Result<Vec<Snapshot>> {
    let mut state = SimulationState::new(rho0, field.clone());
    let mut out = Vec::with_capacity(config.output_times.len());
    let mut pending = config.output_times.iter().copied().peekable();

    loop {
        while let Some(&target) = pending.peek() {
            if (state.t - target).abs() <= TIME_EPS {
                state.t = target;
                out.push(Snapshot { t: target, rho: state.rho.clone(), step_count: state.step_count });
                pending.next();
            } else {
                break;
            }
        }
        if pending.peek().is_none() || state.t >= config.t_end - TIME_EPS {
            break;
        }
        strang_step(&mut state, config)?;
        if !state.rho.all_finite() {
            return Err(Error::NonFinite { step: state.step_count });
        }
    }
    Ok(out)
}
