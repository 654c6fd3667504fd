//! Positive phase-space densities, the comoving shift and the affine
//! interpolant between two endpoints.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{compensated_sum, wrap_period, Boundary, DensityArray, PhaseGrid, VelocityAxis};

const INV_FOUR_PI_SQ: f64 = 1.0 / (4.0 * PI * PI);

/// Normal probability density.
#[inline]
pub fn normal_pdf(y: f64, mu: f64, sigma: f64) -> f64 {
    let z = (y - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// `P(Z ≤ z)` for a standard normal.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `P(Z > z)` for a standard normal.
#[inline]
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Axis-aligned product of two one-dimensional Gaussians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2d {
    pub mu_x: f64,
    pub mu_v: f64,
    pub sigma_x: f64,
    pub sigma_v: f64,
}

impl Gaussian2d {
    #[inline]
    pub fn eval(&self, x: f64, v: f64) -> f64 {
        normal_pdf(x, self.mu_x, self.sigma_x) * normal_pdf(v, self.mu_v, self.sigma_v)
    }

    /// Whether `(self, target)` satisfies `μx^g = μx^f + μv^g` and
    /// `(σx^f)² = (σx^g)² + (σv^g)²`, which makes the pair compatible.
    pub fn is_compatible_transport(&self, target: &Gaussian2d) -> bool {
        let tol = 1e-12;
        (target.mu_x - (self.mu_x + target.mu_v)).abs() <= tol * (1.0 + target.mu_x.abs())
            && (self.sigma_x.powi(2) - (target.sigma_x.powi(2) + target.sigma_v.powi(2))).abs()
                <= tol * self.sigma_x.powi(2)
    }
}

#[derive(Debug, Clone)]
pub enum DensityKind {
    /// `(1 + ε cos x) / (2π)²`
    TorusTrigF {
        eps: f64,
    },
    /// `(1 + ε cos(x − v) + η cos 2v) / (2π)²`
    TorusTrigG {
        eps: f64,
        eta: f64,
    },
    GaussianProduct(Gaussian2d),
    /// `base(x − shear·v, v)`, i.e. `base` pushed forward by free transport for time `shear`.
    Sheared {
        base: Box<DensitySpec>,
        shear: f64,
    },
    /// Cell samples on the periodic grid, evaluated by periodic bilinear interpolation.
    Gridded(Arc<DensityArray>),
}

/// A validated, strictly positive density. Construction checks positivity,
/// so evaluation never fails.
#[derive(Debug, Clone)]
pub struct DensitySpec(DensityKind);

impl DensitySpec {
    pub fn torus_f(eps: f64) -> Result<Self> {
        check_trig(eps, 0.0)?;
        Ok(Self(DensityKind::TorusTrigF { eps }))
    }

    pub fn torus_g(eps: f64, eta: f64) -> Result<Self> {
        check_trig(eps, eta)?;
        Ok(Self(DensityKind::TorusTrigG { eps, eta }))
    }

    pub fn gaussian(mu_x: f64, mu_v: f64, sigma_x: f64, sigma_v: f64) -> Result<Self> {
        let all_finite = [mu_x, mu_v, sigma_x, sigma_v].iter().all(|p| p.is_finite());
        if !all_finite || sigma_x <= 0.0 || sigma_v <= 0.0 {
            return Err(Error::InvalidDensity(format!(
                "Gaussian needs finite means and positive widths, got σx={sigma_x}, σv={sigma_v}"
            )));
        }
        Ok(Self(DensityKind::GaussianProduct(Gaussian2d { mu_x, mu_v, sigma_x, sigma_v })))
    }

    pub fn sheared(base: DensitySpec, shear: f64) -> Result<Self> {
        if !shear.is_finite() {
            return Err(Error::InvalidDensity("shear must be finite".into()));
        }
        Ok(Self(DensityKind::Sheared { base: Box::new(base), shear }))
    }

    pub fn gridded(arr: DensityArray) -> Result<Self> {
        if let Some(k) = arr.values().iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidDensity(format!(
                "gridded density must be positive and finite, bad value at flat index {k}"
            )));
        }
        Ok(Self(DensityKind::Gridded(Arc::new(arr))))
    }

    pub fn kind(&self) -> &DensityKind {
        &self.0
    }

    /// Density value at `(x, v)`.
    pub fn eval(&self, x: f64, v: f64) -> f64 {
        match &self.0 {
            DensityKind::TorusTrigF { eps } => INV_FOUR_PI_SQ * (1.0 + eps * x.cos()),
            DensityKind::TorusTrigG { eps, eta } => {
                INV_FOUR_PI_SQ * (1.0 + eps * (x - v).cos() + eta * (2.0 * v).cos())
            }
            DensityKind::GaussianProduct(gauss) => gauss.eval(x, v),
            DensityKind::Sheared { base, shear } => base.eval(x - shear * v, v),
            DensityKind::Gridded(arr) => arr.interpolate(x, v),
        }
    }

    /// Positive lower bound where one is known in closed form.
    pub fn lower_bound(&self) -> Option<f64> {
        match &self.0 {
            DensityKind::TorusTrigF { eps } => Some(INV_FOUR_PI_SQ * (1.0 - eps.abs())),
            DensityKind::TorusTrigG { eps, eta } => Some(INV_FOUR_PI_SQ * (1.0 - eps.abs() - eta.abs())),
            DensityKind::Gridded(arr) => Some(arr.min()),
            _ => None,
        }
    }

    pub fn is_gridded(&self) -> bool {
        matches!(self.0, DensityKind::Gridded(_))
    }

    /// True if the density has a closed form (everything except gridded input).
    pub fn is_analytic(&self) -> bool {
        match &self.0 {
            DensityKind::Gridded(_) => false,
            DensityKind::Sheared { base, .. } => base.is_analytic(),
            _ => true,
        }
    }
}

fn check_trig(eps: f64, eta: f64) -> Result<()> {
    if !(eps.is_finite() && eta.is_finite()) || eps.abs() + eta.abs() >= 1.0 {
        return Err(Error::InvalidDensity(format!("trigonometric density needs |ε| + |η| < 1, got ε={eps}, η={eta}")));
    }
    Ok(())
}

/// Free-transport map `Φ_t(x, v) = (x + t v, v)`, with `x` wrapped to `[0, 2π)`.
pub fn shift_map(x: f64, v: f64, t: f64) -> Result<(f64, f64)> {
    if !(x.is_finite() && v.is_finite() && t.is_finite()) {
        return Err(Error::InvalidArgument("shift_map: non-finite input".into()));
    }
    Ok((wrap_period(x + t * v, 0.0), v))
}

/// Midpoint quadrature of `h` over the cells of `axis`.
pub fn midpoint_quadrature(axis: &VelocityAxis, h: impl Fn(f64) -> f64) -> f64 {
    compensated_sum((0..axis.len()).map(|j| h(axis.center(j)))) * axis.dv()
}

fn analytic_marginal(spec: &DensitySpec, x: f64, axis: &VelocityAxis) -> Option<f64> {
    match spec.kind() {
        DensityKind::GaussianProduct(gauss) => Some(normal_pdf(x, gauss.mu_x, gauss.sigma_x)),
        DensityKind::TorusTrigF { eps } if axis.boundary() == Boundary::Periodic => {
            Some((1.0 + eps * x.cos()) / (2.0 * PI))
        }
        _ => None,
    }
}

fn analytic_shifted_marginal(spec: &DensitySpec, x: f64, axis: &VelocityAxis) -> Option<f64> {
    match spec.kind() {
        // x + v − μx with v ~ N(μv, σv²) is Gaussian in x with mean μx − μv
        // and variance σx² + σv².
        DensityKind::GaussianProduct(gauss) => {
            let sigma = gauss.sigma_x.hypot(gauss.sigma_v);
            Some(normal_pdf(x, gauss.mu_x - gauss.mu_v, sigma))
        }
        DensityKind::TorusTrigG { eps, .. } if axis.boundary() == Boundary::Periodic => {
            Some((1.0 + eps * x.cos()) / (2.0 * PI))
        }
        _ => None,
    }
}

/// `∫_V spec(x, v) dv`. Gaussian products use their closed-form marginal
/// over the real line, torus densities theirs over the circle; everything
/// else uses midpoint quadrature on `axis`.
pub fn velocity_marginal(spec: &DensitySpec, x: f64, axis: &VelocityAxis) -> f64 {
    analytic_marginal(spec, x, axis).unwrap_or_else(|| midpoint_quadrature(axis, |v| spec.eval(x, v)))
}

/// `∫_V spec(x + v, v) dv`, the marginal of `spec ∘ Φ_1`.
pub fn shifted_marginal(spec: &DensitySpec, x: f64, axis: &VelocityAxis) -> f64 {
    analytic_shifted_marginal(spec, x, axis).unwrap_or_else(|| midpoint_quadrature(axis, |v| spec.eval(x + v, v)))
}

/// Marginal mismatch at one `x`. Closed forms are used only when both sides
/// have one, so truncation of the window affects both sides equally.
pub fn marginal_residual(f: &DensitySpec, g: &DensitySpec, x: f64, axis: &VelocityAxis) -> f64 {
    match (analytic_marginal(f, x, axis), analytic_shifted_marginal(g, x, axis)) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => {
            let a = midpoint_quadrature(axis, |v| f.eval(x, v));
            let b = midpoint_quadrature(axis, |v| g.eval(x + v, v));
            (a - b).abs()
        }
    }
}

/// Per-x residuals of the marginal compatibility condition.
#[derive(Debug, Clone)]
pub struct CompatReport {
    pub xs: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub worst_x: f64,
}

impl CompatReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }

    pub fn to_error(&self) -> Error {
        Error::Compatibility { max_residual: self.max_residual, worst_x: self.worst_x }
    }
}

/// `|∫ f(x,v) dv − ∫ g(x+v,v) dv|` at every `x` in `xs`.
pub fn check_compatibility_at(f: &DensitySpec, g: &DensitySpec, xs: &[f64], axis: &VelocityAxis) -> CompatReport {
    let residuals: Vec<f64> = xs.iter().map(|&x| marginal_residual(f, g, x, axis)).collect();
    let (worst, max_residual) =
        residuals
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, r)| if r > bv { (i, r) } else { (bi, bv) });
    CompatReport { xs: xs.to_vec(), max_residual, worst_x: xs.get(worst).copied().unwrap_or(0.0), residuals }
}

/// Compatibility at the x-centres of `grid`, integrating over `axis`.
pub fn check_compatibility(f: &DensitySpec, g: &DensitySpec, grid: &PhaseGrid, axis: &VelocityAxis) -> CompatReport {
    let (xs, _) = grid.cell_centers();
    check_compatibility_at(f, g, &xs, axis)
}

/// The affine path `ρ̃_t = (1 − t) f + t g∘Φ_1` in the comoving frame.
#[derive(Debug, Clone, Copy)]
pub struct InterpolantAtTime<'a> {
    t: f64,
    f: &'a DensitySpec,
    g: &'a DensitySpec,
}

pub fn interpolant<'a>(f: &'a DensitySpec, g: &'a DensitySpec, t: f64) -> Result<InterpolantAtTime<'a>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("interpolation time {t} outside [0, 1]")));
    }
    Ok(InterpolantAtTime { t, f, g })
}

impl<'a> InterpolantAtTime<'a> {
    pub fn t(&self) -> f64 {
        self.t
    }

    /// `ρ̃_t(x, v)`.
    #[inline]
    pub fn rho(&self, x: f64, v: f64) -> f64 {
        let t = self.t;
        (1.0 - t) * self.f.eval(x, v) + t * self.g.eval(x + v, v)
    }

    /// `R(x, v) = f(x, v) − g(x + v, v)`, which equals `−∂_t ρ̃_t`.
    #[inline]
    pub fn residual(&self, x: f64, v: f64) -> f64 {
        self.f.eval(x, v) - self.g.eval(x + v, v)
    }
}

/// A named pair of endpoint densities plus the velocity domain they live on.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub f: DensitySpec,
    pub g: DensitySpec,
    v_window: Option<(f64, f64)>,
}

impl Preset {
    /// Window used for the Gaussian-transport pair (eight standard deviations).
    pub const GAUSSIAN_WINDOW: f64 = 8.0;

    /// `f = (1 + ε cos x)/(2π)²`, `g = (1 + ε cos(x−v) + η cos 2v)/(2π)²`.
    pub fn torus(eps: f64, eta: f64) -> Result<Self> {
        Ok(Self {
            name: "torus".into(),
            f: DensitySpec::torus_f(eps)?,
            g: DensitySpec::torus_g(eps, eta)?,
            v_window: None,
        })
    }

    /// Standard Gaussian and its free-transport image, centred at `x = π`
    /// so the bump sits inside the periodic x-window.
    pub fn gaussian_shift() -> Result<Self> {
        let f = DensitySpec::gaussian(PI, 0.0, 1.0, 1.0)?;
        let g = DensitySpec::sheared(f.clone(), 1.0)?;
        Ok(Self { name: "gaussian-shift".into(), f, g, v_window: None })
    }

    /// Gaussian transport pair with `μx^f = μv^f = 0`, `σv^f = 1`,
    /// `σx^g = σv^g = 1`, `μv^g = 1`, hence `μx^g = 1`, `σx^f = √2`.
    pub fn gaussian_transport() -> Result<Self> {
        let f = DensitySpec::gaussian(0.0, 0.0, SQRT_2, 1.0)?;
        let g = DensitySpec::gaussian(1.0, 1.0, 1.0, 1.0)?;
        let w = Self::GAUSSIAN_WINDOW;
        Ok(Self { name: "gaussian-transport".into(), f, g, v_window: Some((-w, w)) })
    }

    pub fn from_pair(name: &str, f: DensitySpec, g: DensitySpec) -> Self {
        Self { name: name.into(), f, g, v_window: None }
    }

    /// Put the pair on the truncated velocity window `[lo, hi]` (Neumann).
    pub fn with_v_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("bad velocity window [{lo}, {hi}]")));
        }
        self.v_window = Some((lo, hi));
        Ok(self)
    }

    pub fn by_name(name: &str, eps: f64, eta: f64) -> Result<Self> {
        match name {
            "torus" => Self::torus(eps, eta),
            "gaussian-shift" => Self::gaussian_shift(),
            "gaussian-transport" => Self::gaussian_transport(),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }

    /// Velocity axis with `n` cells: the periodic torus unless the preset
    /// lives on a truncated window.
    pub fn velocity_axis(&self, n: usize) -> Result<VelocityAxis> {
        match self.v_window {
            Some((lo, hi)) => VelocityAxis::new(lo, hi, n, Boundary::Neumann),
            None => VelocityAxis::torus(n),
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.v_window.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn torus_pair() -> (DensitySpec, DensitySpec) {
        (DensitySpec::torus_f(0.3).unwrap(), DensitySpec::torus_g(0.3, 0.5).unwrap())
    }

    #[test]
    fn eval_examples() {
        let (f, g) = torus_pair();
        assert!((f.eval(0.0, 1.234) - 1.3 / (4.0 * PI * PI)).abs() < 1e-16);
        assert!((f.eval(0.0, 0.0) - 0.0329289).abs() < 1e-6);
        assert!((g.eval(0.0, 0.0) - 1.8 / (4.0 * PI * PI)).abs() < 1e-16);
        assert!((g.eval(0.0, 0.0) - 0.0455939).abs() < 1e-6);
        let gauss = DensitySpec::gaussian(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!((gauss.eval(0.0, 0.0) - 1.0 / (2.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn construction_rejects_invalid() {
        assert!(DensitySpec::torus_f(1.0).is_err());
        assert!(DensitySpec::torus_g(0.5, 0.5).is_err());
        assert!(DensitySpec::torus_g(-0.6, 0.4).is_err());
        assert!(DensitySpec::torus_g(-0.6, 0.3).is_ok());
        assert!(DensitySpec::gaussian(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(DensitySpec::gaussian(0.0, 0.0, 1.0, -1.0).is_err());
        let grid = PhaseGrid::new(2, 2).unwrap();
        let arr = DensityArray::from_values(grid, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(DensitySpec::gridded(arr).is_err());
    }

    #[test]
    fn shift_map_examples() {
        assert_eq!(shift_map(1.5, 0.7, 0.0).unwrap(), (1.5, 0.7));
        let (x, v) = shift_map(0.0, PI / 2.0, 1.0).unwrap();
        assert!((x - PI / 2.0).abs() < 1e-15 && v == PI / 2.0);
        let (x1, v1) = shift_map(1.0, 0.7, 0.3).unwrap();
        let (x0, v0) = shift_map(x1, v1, -0.3).unwrap();
        assert!((x0 - 1.0).abs() < 1e-15 && v0 == 0.7);
        assert!(shift_map(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn marginal_examples() {
        let (f, g) = torus_pair();
        let axis = VelocityAxis::torus(64).unwrap();
        assert!((velocity_marginal(&f, 0.0, &axis) - 1.3 / (2.0 * PI)).abs() < 1e-15);
        assert!((velocity_marginal(&f, 0.0, &axis) - 0.2069014).abs() < 1e-7);
        for x in [0.0, 0.4, 2.0, 5.9] {
            // quadrature route for both, independent of the analytic branch
            let qf = midpoint_quadrature(&axis, |v| f.eval(x, v));
            let qg = midpoint_quadrature(&axis, |v| g.eval(x + v, v));
            assert!((qf - qg).abs() < 1e-15);
            assert!((shifted_marginal(&g, x, &axis) - qf).abs() < 1e-15);
        }
        let gauss = DensitySpec::gaussian(0.0, 0.0, SQRT_2, 1.0).unwrap();
        let expect = 1.0 / ((2.0 * PI).sqrt() * SQRT_2);
        assert!((velocity_marginal(&gauss, 0.0, &axis) - expect).abs() < 1e-15);
        assert!((expect - 0.2820948).abs() < 1e-7);
    }

    #[test]
    fn compatibility_torus_pair() {
        let (f, g) = torus_pair();
        let grid = PhaseGrid::square(256).unwrap();
        let axis = grid.velocity_axis();
        let rep = check_compatibility(&f, &g, &grid, &axis);
        assert!(rep.max_residual <= 1e-12);
        assert_eq!(rep.residuals.len(), 256);
    }

    #[test]
    fn compatibility_mismatched_eps() {
        let f = DensitySpec::torus_f(0.3).unwrap();
        let g = DensitySpec::torus_g(0.2, 0.5).unwrap();
        let grid = PhaseGrid::square(256).unwrap();
        let axis = grid.velocity_axis();
        // oracle: brute-force midpoint quadrature of both marginals at every x-centre
        let (xs, _) = grid.cell_centers();
        let oracle = xs
            .iter()
            .map(|&x| {
                let a = midpoint_quadrature(&axis, |v| f.eval(x, v));
                let b = midpoint_quadrature(&axis, |v| g.eval(x + v, v));
                (a - b).abs()
            })
            .fold(0.0, f64::max);
        let rep = check_compatibility(&f, &g, &grid, &axis);
        assert!((rep.max_residual - oracle).abs() < 1e-14);
        // x-centres miss x = 0 by dx/2, so the max is 0.1 cos(dx/2)/(2π)
        let expect = 0.1 * (grid.dx() / 2.0).cos() / (2.0 * PI);
        assert!((rep.max_residual - expect).abs() < 1e-15);
        assert!((rep.max_residual - 0.0159155).abs() < 2e-6);
        // including x = 0 recovers the analytic maximum
        let rep0 = check_compatibility_at(&f, &g, &[0.0], &axis);
        assert!((rep0.max_residual - 0.1 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn compatibility_gaussian_transport_by_quadrature() {
        let p = Preset::gaussian_transport().unwrap();
        let axis = p.velocity_axis(160_000).unwrap(); // step 1e-4 on [-8, 8]
        for x in [-3.0, -1.0, 0.0, 0.5, 2.0, 4.0] {
            let a = midpoint_quadrature(&axis, |v| p.f.eval(x, v));
            let b = midpoint_quadrature(&axis, |v| p.g.eval(x + v, v));
            assert!((a - b).abs() <= 1e-10, "x={x}: {a} vs {b}");
            assert!((velocity_marginal(&p.f, x, &axis) - a).abs() <= 1e-10);
            assert!((shifted_marginal(&p.g, x, &axis) - b).abs() <= 1e-10);
        }
        let xs: Vec<f64> = (0..41).map(|k| -4.0 + 0.2 * k as f64).collect();
        let rep = check_compatibility_at(&p.f, &p.g, &xs, &axis);
        assert!(rep.max_residual <= 1e-10);
    }

    #[test]
    fn interpolant_examples() {
        let (f, g) = torus_pair();
        assert!(interpolant(&f, &g, -0.1).is_err());
        assert!(interpolant(&f, &g, 1.5).is_err());
        let r0 = interpolant(&f, &g, 0.0).unwrap();
        let r1 = interpolant(&f, &g, 1.0).unwrap();
        for (x, v) in [(0.0, 0.0), (1.0, -2.0), (4.0, 3.0)] {
            assert_eq!(r0.rho(x, v), f.eval(x, v));
            assert_eq!(r1.rho(x, v), g.eval(x + v, v));
        }
        assert!((r1.rho(0.0, 0.0) - 0.0455939).abs() < 1e-6);
        for t in [0.0, 0.25, 0.6, 1.0] {
            let it = interpolant(&f, &g, t).unwrap();
            for (x, v) in [(0.3f64, 0.2f64), (2.0, -1.0), (5.0, 2.9)] {
                let expect = (1.0 + 0.3 * f64::cos(x) + t * 0.5 * (2.0 * v).cos()) / (4.0 * PI * PI);
                assert!((it.rho(x, v) - expect).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn residual_zero_mean_iff_compatible() {
        let axis = VelocityAxis::torus(128).unwrap();
        let f = DensitySpec::torus_f(0.3).unwrap();
        for (eps_g, compatible) in [(0.3, true), (0.2, false)] {
            let g = DensitySpec::torus_g(eps_g, 0.5).unwrap();
            let it = interpolant(&f, &g, 0.4).unwrap();
            for x in [0.1, 1.0, 2.5] {
                let mean = midpoint_quadrature(&axis, |v| it.residual(x, v));
                let compat = (velocity_marginal(&f, x, &axis) - shifted_marginal(&g, x, &axis)).abs();
                assert!((mean.abs() - compat).abs() < 1e-15);
                assert_eq!(mean.abs() < 1e-14, compatible);
            }
        }
    }

    #[test]
    fn gaussian_shift_pair_is_free_transport() {
        let p = Preset::gaussian_shift().unwrap();
        for (x, v) in [(0.5, 1.0), (3.0, -2.0), (PI, 0.0)] {
            let expect = normal_pdf(x - v, PI, 1.0) * normal_pdf(v, 0.0, 1.0);
            assert!((p.g.eval(x, v) - expect).abs() < 1e-17);
        }
    }

    #[test]
    fn gaussian_shift_compatible_on_torus() {
        let p = Preset::gaussian_shift().unwrap();
        let grid = PhaseGrid::square(128).unwrap();
        let rep = check_compatibility(&p.f, &p.g, &grid, &grid.velocity_axis());
        assert!(rep.max_residual <= 1e-15, "{}", rep.max_residual);
    }

    proptest! {
        #[test]
        fn interpolant_marginal_is_time_invariant(t in 0.0f64..=1.0, x in 0.0f64..std::f64::consts::TAU) {
            let (f, g) = torus_pair();
            let axis = VelocityAxis::torus(256).unwrap();
            let it = interpolant(&f, &g, t).unwrap();
            let m = midpoint_quadrature(&axis, |v| it.rho(x, v));
            prop_assert!((m - velocity_marginal(&f, x, &axis)).abs() <= 1e-12);
        }

        #[test]
        fn interpolant_stays_positive(t in 0.0f64..=1.0) {
            let (f, g) = torus_pair();
            let grid = PhaseGrid::square(64).unwrap();
            let it = interpolant(&f, &g, t).unwrap();
            let bound = (1.0 - 0.3 - 0.5) / (4.0 * PI * PI);
            for i in 0..64 {
                for j in 0..64 {
                    prop_assert!(it.rho(grid.x_center(i), grid.v_center(j)) >= bound - 1e-18);
                }
            }
        }

        #[test]
        fn interpolant_is_affine_in_t(t in 0.0f64..=1.0, x in -3.0f64..3.0, v in -3.0f64..3.0) {
            let p = Preset::gaussian_transport().unwrap();
            let it = interpolant(&p.f, &p.g, t).unwrap();
            let it0 = interpolant(&p.f, &p.g, 0.0).unwrap();
            // ρ̃_t = ρ̃_0 − t R
            let lhs = it.rho(x, v);
            let rhs = it0.rho(x, v) - t * it.residual(x, v);
            prop_assert!((lhs - rhs).abs() <= 1e-15);
        }
    }
}
