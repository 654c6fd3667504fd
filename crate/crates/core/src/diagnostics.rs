//! Mass, positivity and L1 diagnostics against the exact comoving path
//! `ρ(x, v, t) = ρ̃_t(x − t v, v)`.

use std::io::Write;

use crate::densities::{interpolant, DensitySpec, Preset};
use crate::error::{Error, Result};
use crate::field::{build_field, FieldMethod};
use crate::grid::{compensated_sum, wrap_period, DensityArray, PhaseGrid};
use crate::liouville::{simulate, Snapshot, SolverConfig};

pub const DIAGNOSTICS_HEADER: &str = "t,mass,l1_error,min_rho,steps";

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub l1_error: f64,
    pub min_rho: f64,
    pub step_count: usize,
}

/// `ρ̃_t(wrap(x − t v), v)`. Needs closed-form endpoints.
pub fn exact_path(f: &DensitySpec, g: &DensitySpec, x: f64, v: f64, t: f64) -> Result<f64> {
    if !(f.is_analytic() && g.is_analytic()) {
        return Err(Error::Unsupported("exact path needs analytic densities".into()));
    }
    let rho = interpolant(f, g, t)?;
    Ok(rho.rho(wrap_period(x - t * v, 0.0), v))
}

/// Exact path sampled at the cell centres of `grid`.
pub fn sample_exact(f: &DensitySpec, g: &DensitySpec, grid: &PhaseGrid, t: f64) -> Result<DensityArray> {
    exact_path(f, g, 0.0, 0.0, t)?;
    let rho = interpolant(f, g, t)?;
    Ok(DensityArray::from_fn(*grid, |x, v| rho.rho(wrap_period(x - t * v, 0.0), v)))
}

/// `Σ |a − b| dx dv` in row-major order.
pub fn l1_distance(a: &DensityArray, b: &DensityArray) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::InvalidArgument("L1 distance between different grids".into()));
    }
    Ok(compensated_sum(a.values().iter().zip(b.values()).map(|(p, q)| (p - q).abs())) * a.grid().cell_area())
}

/// L1 distance between `num` and the exact path at time `t`.
pub fn l1_error(num: &DensityArray, f: &DensitySpec, g: &DensitySpec, t: f64) -> Result<f64> {
    let exact = sample_exact(f, g, num.grid(), t)?;
    l1_distance(num, &exact)
}

/// One diagnostics row per snapshot. `l1_error` is NaN when the endpoints
/// have no exact path (gridded input).
pub fn diagnose(snapshots: &[Snapshot], f: &DensitySpec, g: &DensitySpec) -> Result<Vec<DiagnosticsRecord>> {
    snapshots
        .iter()
        .map(|s| {
            let l1 = match l1_error(&s.rho, f, g, s.t) {
                Ok(e) => e,
                Err(Error::Unsupported(_)) => f64::NAN,
                Err(e) => return Err(e),
            };
            Ok(DiagnosticsRecord {
                t: s.t,
                mass: s.rho.integrate(),
                l1_error: l1,
                min_rho: s.rho.min(),
                step_count: s.step_count,
            })
        })
        .collect()
}

/// Torus test with `(ε, η) = (0.3, 0.5)` and the closed-form field.
pub fn run_table1(grid: &PhaseGrid, config: &SolverConfig) -> Result<Vec<DiagnosticsRecord>> {
    let preset = Preset::torus(0.3, 0.5)?;
    run_preset(&preset, FieldMethod::ClosedForm, grid, config)
}

/// Build the field for `preset`, simulate, and diagnose every snapshot.
pub fn run_preset(
    preset: &Preset,
    method: FieldMethod,
    grid: &PhaseGrid,
    config: &SolverConfig,
) -> Result<Vec<DiagnosticsRecord>> {
    if !preset.is_periodic() {
        return Err(Error::Unsupported(format!(
            "preset '{}' lives on a truncated velocity window; the solver needs the periodic torus",
            preset.name
        )));
    }
    let axis = preset.velocity_axis(grid.nv())?;
    let field = build_field(&preset.f, &preset.g, method, grid, &axis)?;
    let snaps = simulate(&preset.f, &field, grid, config)?;
    diagnose(&snaps, &preset.f, &preset.g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub l1_error: f64,
    /// `log2(E_prev / E_this)`; `None` for the coarsest grid.
    pub order: Option<f64>,
}

/// L1 error at `t_end` on `n × n` grids for each `n`, with observed orders.
pub fn convergence_study(
    preset: &Preset,
    sizes: &[usize],
    method: FieldMethod,
    config: &SolverConfig,
) -> Result<Vec<ConvergenceRow>> {
    if sizes.len() < 2 {
        return Err(Error::InvalidArgument("convergence study needs at least two grids".into()));
    }
    let cfg = SolverConfig::new(config.cfl_x, config.cfl_v, config.t_end, vec![])?.with_scheme(config.scheme);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let grid = PhaseGrid::square(n)?;
        let recs = run_preset(preset, method, &grid, &cfg)?;
        let err = recs.last().expect("t_end snapshot").l1_error;
        let order = rows.last().map(|prev| (prev.l1_error / err).log2());
        rows.push(ConvergenceRow { n, l1_error: err, order });
    }
    Ok(rows)
}

/// `%.8g`-style formatting: eight significant digits.
pub fn fmt_sig8(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}").to_lowercase();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.7e}", x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..8).contains(&exp) {
        let decimals = (7 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let (mant, _) = sci.split_at(sci.find('e').unwrap());
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

pub fn write_diagnostics_csv<W: Write>(mut w: W, records: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_sig8(r.t),
            fmt_sig8(r.mass),
            fmt_sig8(r.l1_error),
            fmt_sig8(r.min_rho),
            r.step_count
        )?;
    }
    Ok(())
}

pub fn write_convergence_csv<W: Write>(mut w: W, rows: &[ConvergenceRow]) -> Result<()> {
    writeln!(w, "n,l1_error,order")?;
    for r in rows {
        let order = r.order.map(fmt_sig8).unwrap_or_default();
        writeln!(w, "{},{},{}", r.n, fmt_sig8(r.l1_error), order)?;
    }
    Ok(())
}
