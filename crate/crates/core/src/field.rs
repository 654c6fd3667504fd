//! The acceleration field `a(x, v, t) = ∂_v U_t(x − t v, v)` in original
//! variables.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::densities::{check_compatibility_at, CompatReport, DensityKind, DensitySpec, Gaussian2d};
use crate::elliptic::{closed_form_gaussian_du, closed_form_torus_du, interp_centers, solve_profile, Normalization};
use crate::error::{Error, Result};
use crate::grid::{split_index, wrap_period, PhaseGrid, VelocityAxis};

/// Marginal mismatch above which a pair is refused.
pub const BUILD_COMPAT_TOL: f64 = 1e-8;

/// Safety factor applied to probed field maxima.
pub const PROBE_SAFETY: f64 = 1.05;

/// Number of time levels solved and kept by a grid-backed field.
const LEVEL_CACHE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldMethod {
    ClosedForm,
    Numeric,
}

impl std::str::FromStr for FieldMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" => Ok(Self::ClosedForm),
            "numeric" => Ok(Self::Numeric),
            other => Err(Error::Config(format!("unknown field method '{other}' (expected closed-form or numeric)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum FieldKind {
    Zero,
    ClosedFormTorus { eps: f64, eta: f64 },
    ClosedFormGaussian { f: Gaussian2d, g: Gaussian2d },
    GridBacked(Arc<GridField>),
}

/// `∂_v U_t` tabulated at the x-centres of a periodic grid, solved lazily
/// per time level.
#[derive(Debug)]
pub struct GridField {
    f: DensitySpec,
    g: DensitySpec,
    grid: PhaseGrid,
    axis: VelocityAxis,
    levels: Mutex<VecDeque<(u64, Arc<Vec<f64>>)>>,
}

impl GridField {
    fn new(f: DensitySpec, g: DensitySpec, grid: PhaseGrid, axis: VelocityAxis) -> Self {
        Self { f, g, grid, axis, levels: Mutex::new(VecDeque::new()) }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn axis(&self) -> &VelocityAxis {
        &self.axis
    }

    /// Row-major `nx × n_v` table of `∂_v U_t` at time `t`.
    pub fn level(&self, t: f64) -> Result<Arc<Vec<f64>>> {
        let key = t.to_bits();
        if let Some(hit) = self.lookup(key) {
            return Ok(hit);
        }
        // Solved outside the lock; a racing fill of the same key computes the
        // same table and the first insert wins.
        let columns: Vec<Vec<f64>> = (0..self.grid.nx())
            .into_par_iter()
            .map(|i| {
                solve_profile(&self.f, &self.g, self.grid.x_center(i), t, &self.axis, Normalization::WeightedMean)
                    .map(|p| p.du)
            })
            .collect::<Result<_>>()?;
        let table = Arc::new(columns.concat());
        let mut levels = self.levels.lock().expect("level cache poisoned");
        if let Some((_, existing)) = levels.iter().find(|(k, _)| *k == key) {
            return Ok(existing.clone());
        }
        if levels.len() == LEVEL_CACHE {
            levels.pop_front();
        }
        levels.push_back((key, table.clone()));
        Ok(table)
    }

    fn lookup(&self, key: u64) -> Option<Arc<Vec<f64>>> {
        let levels = self.levels.lock().expect("level cache poisoned");
        levels.iter().find(|(k, _)| *k == key).map(|(_, v)| v.clone())
    }

    /// Comoving `∂_v U_t(xc, v)` from a level table: periodic linear in x,
    /// linear in v.
    fn comoving(&self, table: &[f64], xc: f64, v: f64) -> f64 {
        let nx = self.grid.nx();
        let nv = self.axis.len();
        let s = wrap_period(xc, 0.0) / self.grid.dx() - 0.5;
        let (i0, w) = split_index(s, nx);
        let i1 = (i0 + 1) % nx;
        let a = interp_centers(&self.axis, &table[i0 * nv..(i0 + 1) * nv], v);
        let b = interp_centers(&self.axis, &table[i1 * nv..(i1 + 1) * nv], v);
        a * (1.0 - w) + b * w
    }
}

/// Acceleration field plus a cached bound on `|a|`.
#[derive(Debug, Clone)]
pub struct AccelerationField {
    kind: FieldKind,
    max_abs: f64,
}

/// The field frozen at one time, cheap to evaluate in inner loops.
pub enum FieldAtTime<'a> {
    Zero,
    Torus { eps: f64, eta: f64, t: f64 },
    Gaussian { f: Gaussian2d, g: Gaussian2d, t: f64 },
    Grid { field: &'a GridField, t: f64, table: Arc<Vec<f64>> },
}

impl FieldAtTime<'_> {
    #[inline]
    pub fn eval(&self, x: f64, v: f64) -> f64 {
        match self {
            FieldAtTime::Zero => 0.0,
            FieldAtTime::Torus { eps, eta, t } => closed_form_torus_du(wrap_period(x - t * v, 0.0), v, *t, *eps, *eta),
            FieldAtTime::Gaussian { f, g, t } => closed_form_gaussian_du(x - t * v, v, *t, f, g).value,
            FieldAtTime::Grid { field, t, table } => field.comoving(table, x - t * v, v),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FieldAtTime::Zero)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("field time {t} outside [0, 1]")));
    }
    Ok(())
}

impl AccelerationField {
    pub fn zero() -> Self {
        Self { kind: FieldKind::Zero, max_abs: 0.0 }
    }

    pub fn closed_form_torus(eps: f64, eta: f64) -> Result<Self> {
        if eps.abs() + eta.abs() >= 1.0 {
            return Err(Error::InvalidArgument(format!("need |ε| + |η| < 1, got ({eps}, {eta})")));
        }
        let max_abs = eta.abs() / (2.0 * (1.0 - eps.abs() - eta.abs()));
        Ok(Self { kind: FieldKind::ClosedFormTorus { eps, eta }, max_abs })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, FieldKind::Zero)
    }

    pub fn at_time(&self, t: f64) -> Result<FieldAtTime<'_>> {
        check_time(t)?;
        Ok(match &self.kind {
            FieldKind::Zero => FieldAtTime::Zero,
            FieldKind::ClosedFormTorus { eps, eta } => FieldAtTime::Torus { eps: *eps, eta: *eta, t },
            FieldKind::ClosedFormGaussian { f, g } => FieldAtTime::Gaussian { f: *f, g: *g, t },
            FieldKind::GridBacked(grid) => FieldAtTime::Grid { field: grid, t, table: grid.level(t)? },
        })
    }

    /// `a(x, v, t)`.
    pub fn eval_a(&self, x: f64, v: f64, t: f64) -> Result<f64> {
        Ok(self.at_time(t)?.eval(x, v))
    }

    /// Comoving `∂_v U_t(x, v)`, so that `eval_a(x, v, t) = comoving_du(x − t v, v, t)`.
    pub fn comoving_du(&self, x: f64, v: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match &self.kind {
            FieldKind::Zero => 0.0,
            FieldKind::ClosedFormTorus { eps, eta } => closed_form_torus_du(x, v, t, *eps, *eta),
            FieldKind::ClosedFormGaussian { f, g } => closed_form_gaussian_du(x, v, t, f, g).value,
            FieldKind::GridBacked(grid) => grid.comoving(&grid.level(t)?, x, v),
        })
    }

    /// Bound on `|a|` over the domain and `t ∈ [0, 1]` used for the velocity CFL.
    pub fn max_abs_bound(&self) -> f64 {
        self.max_abs
    }

    /// `sup |a|` over a probe lattice with `refine`× the resolution of
    /// `grid`/`axis` in space and `t_levels` evenly spaced times.
    pub fn probe_sup(&self, grid: &PhaseGrid, axis: &VelocityAxis, refine: usize, t_levels: usize) -> Result<f64> {
        let nxp = grid.nx() * refine;
        let nvp = axis.len() * refine;
        let dxp = grid.dx() / refine as f64;
        let dvp = axis.dv() / refine as f64;
        let mut sup = 0.0f64;
        for k in 0..t_levels {
            let t = if t_levels == 1 { 0.0 } else { k as f64 / (t_levels - 1) as f64 };
            let at = self.at_time(t)?;
            let level_sup = (0..nxp)
                .into_par_iter()
                .map(|i| {
                    let x = (i as f64 + 0.5) * dxp;
                    (0..nvp).map(|j| at.eval(x, axis.v_min() + (j as f64 + 0.5) * dvp).abs()).fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max);
            sup = sup.max(level_sup);
        }
        Ok(sup)
    }
}

/// Compatibility at the cell centres and faces of `grid`.
pub fn build_compat_report(f: &DensitySpec, g: &DensitySpec, grid: &PhaseGrid, axis: &VelocityAxis) -> CompatReport {
    let xs: Vec<f64> = (0..2 * grid.nx()).map(|k| 0.5 * k as f64 * grid.dx()).collect();
    check_compatibility_at(f, g, &xs, axis)
}

fn is_free_transport_pair(f: &DensitySpec, g: &DensitySpec) -> bool {
    match g.kind() {
        DensityKind::Sheared { base, shear } => *shear == 1.0 && same_density(base, f),
        _ => false,
    }
}

fn same_density(a: &DensitySpec, b: &DensitySpec) -> bool {
    match (a.kind(), b.kind()) {
        (DensityKind::TorusTrigF { eps: x }, DensityKind::TorusTrigF { eps: y }) => x == y,
        (DensityKind::TorusTrigG { eps: a1, eta: b1 }, DensityKind::TorusTrigG { eps: a2, eta: b2 }) => {
            a1 == a2 && b1 == b2
        }
        (DensityKind::GaussianProduct(p), DensityKind::GaussianProduct(q)) => p == q,
        (DensityKind::Sheared { base: b1, shear: s1 }, DensityKind::Sheared { base: b2, shear: s2 }) => {
            s1 == s2 && same_density(b1, b2)
        }
        (DensityKind::Gridded(p), DensityKind::Gridded(q)) => Arc::ptr_eq(p, q) || p == q,
        _ => false,
    }
}

/// Build the field connecting `f` to `g`, refusing incompatible pairs.
pub fn build_field(
    f: &DensitySpec,
    g: &DensitySpec,
    method: FieldMethod,
    grid: &PhaseGrid,
    axis: &VelocityAxis,
) -> Result<AccelerationField> {
    let report = build_compat_report(f, g, grid, axis);
    if !report.passes(BUILD_COMPAT_TOL) {
        return Err(report.to_error());
    }

    let kind = match method {
        FieldMethod::ClosedForm => {
            if is_free_transport_pair(f, g) {
                return Ok(AccelerationField::zero());
            }
            match (f.kind(), g.kind()) {
                (DensityKind::TorusTrigF { eps }, DensityKind::TorusTrigG { eps: eps_g, eta }) if eps == eps_g => {
                    return AccelerationField::closed_form_torus(*eps, *eta);
                }
                (DensityKind::GaussianProduct(pf), DensityKind::GaussianProduct(pg))
                    if pf.is_compatible_transport(pg) =>
                {
                    FieldKind::ClosedFormGaussian { f: *pf, g: *pg }
                }
                _ => {
                    return Err(Error::Unsupported("no closed-form field for this pair; use the numeric method".into()))
                }
            }
        }
        FieldMethod::Numeric => FieldKind::GridBacked(Arc::new(GridField::new(f.clone(), g.clone(), *grid, *axis))),
    };

    let mut field = AccelerationField { kind, max_abs: 0.0 };
    field.max_abs = PROBE_SAFETY * field.probe_sup(grid, axis, 4, 9)?;
    Ok(field)
}
