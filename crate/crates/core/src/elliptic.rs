//! Weighted elliptic problem in velocity at fixed `(x, t)`:
//!
//! ```text
//! ∂_v(ρ̃_t ∂_v U) = R(x, ·),   ∫ ρ̃_t U dv = 0,
//! ```
//!
//! with zero flux at the ends of a bounded window or periodicity on the
//! torus. In one velocity dimension the divergence-form operator integrates
//! directly: the face flux `ρ̃_t ∂_v U` is a cumulative sum of `R`, so no
//! linear solve is needed and the discrete balance
//! `(flux[j+1] − flux[j]) / dv = R(v_j)` holds to rounding.

use crate::densities::{interpolant, normal_cdf, normal_pdf, normal_sf, DensitySpec, Gaussian2d};
use crate::error::{Error, Result};
#[cfg(test)]
use crate::grid::CompensatedSum;
use crate::grid::{compensated_sum, Boundary, VelocityAxis};

/// Relative size of `∫R dv` (against `‖R‖₁`) above which the right-hand side
/// is rejected as incompatible.
pub const COMPAT_RTOL: f64 = 1e-8;

/// Right-hand sides whose mean is below this fraction of `Σ ρ̃_t` are
/// rounding noise (e.g. `f = g ∘ Φ_1` up to floating-point shear).
const ROUNDOFF_FLOOR: f64 = 1e-14;

/// Additive constant selection for `U`. None of these affect `∂_v U`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Normalization {
    /// `Σ ρ̃_t U dv = 0`.
    #[default]
    WeightedMean,
    /// `Σ U dv = 0`.
    ZeroMean,
    /// `U[j] = 0`.
    Anchor(usize),
}

/// Solution of the weighted problem on one velocity line.
#[derive(Debug, Clone)]
pub struct VelocityPotentialProfile {
    pub x: f64,
    pub t: f64,
    pub axis: VelocityAxis,
    /// `U` at cell centres.
    pub u: Vec<f64>,
    /// `∂_v U` at cell centres.
    pub du: Vec<f64>,
    /// `ρ̃_t ∂_v U` at the `n + 1` faces.
    pub flux: Vec<f64>,
    /// `ρ̃_t` at cell centres.
    pub weight: Vec<f64>,
    /// Constant added to the cumulative flux on a periodic axis (0 for Neumann).
    pub flux_offset: f64,
}

impl VelocityPotentialProfile {
    pub fn v_centers(&self) -> Vec<f64> {
        self.axis.centers()
    }

    /// Build a profile from prescribed face fluxes; `∂_v U` and `U` follow.
    pub fn from_flux(
        f: &DensitySpec,
        g: &DensitySpec,
        x: f64,
        t: f64,
        axis: VelocityAxis,
        flux: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        if flux.len() != axis.len() + 1 {
            return Err(Error::InvalidArgument(format!("expected {} face fluxes, got {}", axis.len() + 1, flux.len())));
        }
        let rho = interpolant(f, g, t)?;
        let weight: Vec<f64> = (0..axis.len()).map(|j| rho.rho(x, axis.center(j))).collect();
        check_weight(&weight, x, t)?;
        Ok(assemble(x, t, axis, flux, weight, 0.0, normalization))
    }

    /// Profile with `U ≡ 0`.
    pub fn zero(f: &DensitySpec, g: &DensitySpec, x: f64, t: f64, axis: VelocityAxis) -> Result<Self> {
        Self::from_flux(f, g, x, t, axis, vec![0.0; axis.len() + 1], Normalization::WeightedMean)
    }

    /// `Σ ρ̃_t U dv`.
    pub fn weighted_mean(&self) -> f64 {
        compensated_sum(self.weight.iter().zip(&self.u).map(|(w, u)| w * u)) * self.axis.dv()
    }

    /// Linear interpolation of `∂_v U` at arbitrary `v`. Periodic axes wrap;
    /// bounded axes clamp to the end cells.
    pub fn du_at(&self, v: f64) -> f64 {
        interp_centers(&self.axis, &self.du, v)
    }
}

pub(crate) fn interp_centers(axis: &VelocityAxis, values: &[f64], v: f64) -> f64 {
    let n = axis.len();
    let s = (v - axis.v_min()) / axis.dv() - 0.5;
    match axis.boundary() {
        Boundary::Periodic => {
            let (j0, w) = crate::grid::split_index(s, n);
            let j1 = (j0 + 1) % n;
            values[j0] * (1.0 - w) + values[j1] * w
        }
        Boundary::Neumann => {
            if s <= 0.0 {
                values[0]
            } else if s >= (n - 1) as f64 {
                values[n - 1]
            } else {
                let j0 = s.floor() as usize;
                let w = s - j0 as f64;
                values[j0] * (1.0 - w) + values[j0 + 1] * w
            }
        }
    }
}

fn check_weight(weight: &[f64], x: f64, t: f64) -> Result<()> {
    let min = weight.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_nan() || min <= 0.0 {
        return Err(Error::Positivity { min, x, t });
    }
    Ok(())
}

fn assemble(
    x: f64,
    t: f64,
    axis: VelocityAxis,
    flux: Vec<f64>,
    weight: Vec<f64>,
    flux_offset: f64,
    normalization: Normalization,
) -> VelocityPotentialProfile {
    let n = axis.len();
    let dv = axis.dv();
    let du: Vec<f64> = (0..n).map(|j| 0.5 * (flux[j] + flux[j + 1]) / weight[j]).collect();

    // trapezoid integration of ∂_v U between neighbouring centres
    let mut u = vec![0.0; n];
    for j in 1..n {
        u[j] = u[j - 1] + 0.5 * dv * (du[j - 1] + du[j]);
    }
    let shift = match normalization {
        Normalization::WeightedMean => {
            compensated_sum(weight.iter().zip(&u).map(|(w, u)| w * u)) / compensated_sum(weight.iter().copied())
        }
        Normalization::ZeroMean => compensated_sum(u.iter().copied()) / n as f64,
        Normalization::Anchor(k) => u[k.min(n - 1)],
    };
    u.iter_mut().for_each(|uj| *uj -= shift);

    VelocityPotentialProfile { x, t, axis, u, du, flux, weight, flux_offset }
}

/// Solve for `U_t(x, ·)` on `axis`.
pub fn solve_profile(
    f: &DensitySpec,
    g: &DensitySpec,
    x: f64,
    t: f64,
    axis: &VelocityAxis,
    normalization: Normalization,
) -> Result<VelocityPotentialProfile> {
    let rho = interpolant(f, g, t)?;
    let n = axis.len();
    let dv = axis.dv();

    let mut weight = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for j in 0..n {
        let v = axis.center(j);
        weight.push(rho.rho(x, v));
        rhs.push(rho.residual(x, v));
    }
    check_weight(&weight, x, t)?;

    let total = compensated_sum(rhs.iter().copied());
    let l1 = compensated_sum(rhs.iter().map(|r| r.abs()));
    let mass = compensated_sum(weight.iter().copied());
    if total.abs() > COMPAT_RTOL * l1 + ROUNDOFF_FLOOR * mass {
        return Err(Error::Compatibility { max_residual: (total * dv).abs(), worst_x: x });
    }
    // project out the rounding-level mean so the cumulative flux closes
    let mean = total / n as f64;

    let mut flux = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    flux.push(0.0);
    for r in &rhs {
        acc += (r - mean) * dv;
        flux.push(acc);
    }
    flux[n] = 0.0;

    let mut flux_offset = 0.0;
    if axis.boundary() == Boundary::Periodic {
        // single-valued U: Σ (F̄_j + c) / ρ̃_j = 0
        let num = compensated_sum((0..n).map(|j| 0.5 * (flux[j] + flux[j + 1]) / weight[j]));
        let den = compensated_sum(weight.iter().map(|w| 1.0 / w));
        flux_offset = -num / den;
        flux.iter_mut().for_each(|q| *q += flux_offset);
    }

    Ok(assemble(x, t, *axis, flux, weight, flux_offset, normalization))
}

/// `max_j |(flux[j+1] − flux[j]) / dv − R(x, v_j)|`.
pub fn elliptic_residual(profile: &VelocityPotentialProfile, f: &DensitySpec, g: &DensitySpec) -> Result<f64> {
    let rho = interpolant(f, g, profile.t)?;
    let dv = profile.axis.dv();
    Ok((0..profile.axis.len())
        .map(|j| {
            let div = (profile.flux[j + 1] - profile.flux[j]) / dv;
            (div - rho.residual(profile.x, profile.axis.center(j))).abs()
        })
        .fold(0.0, f64::max))
}

/// Closed-form `∂_v U_t` for the torus pair:
/// `−(η/2) sin 2v / (1 + ε cos x + t η cos 2v)`.
#[inline]
pub fn closed_form_torus_du(x: f64, v: f64, t: f64, eps: f64, eta: f64) -> f64 {
    -0.5 * eta * (2.0 * v).sin() / (1.0 + eps * x.cos() + t * eta * (2.0 * v).cos())
}

/// Result of the Gaussian closed form; `tail` marks points where the weight
/// underflowed and the value was set to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDu {
    pub value: f64,
    pub tail: bool,
}

/// Weight below which the Gaussian closed form reports zero.
pub const GAUSSIAN_TAIL_WEIGHT: f64 = 1e-300;

/// `F_t(x, v) = ∫_{−∞}^{v} (f(x, s) − g(x + s, s)) ds` for a Gaussian pair.
///
/// `f(x, s)` contributes `A Φ((v − μv^f)/σv^f)`. For the target, the product
/// `N(x + s; μx^g, σx^g) N(s; μv^g, σv^g)` is a Gaussian in `s` with mean
/// `m` and width `τ`, scaled by `B = N(μx^g − x − μv^g; 0, S)`. The upper
/// tail form is used once past the f-median to avoid cancellation.
pub fn gaussian_cumulative_residual(x: f64, v: f64, f: &Gaussian2d, g: &Gaussian2d) -> f64 {
    let a_amp = normal_pdf(x, f.mu_x, f.sigma_x);
    let z_f = (v - f.mu_v) / f.sigma_v;

    let shift = g.mu_x - x;
    let sx2 = g.sigma_x * g.sigma_x;
    let sv2 = g.sigma_v * g.sigma_v;
    let s2 = sx2 + sv2;
    let b_amp = normal_pdf(shift - g.mu_v, 0.0, s2.sqrt());
    let m = (shift * sv2 + g.mu_v * sx2) / s2;
    let tau = g.sigma_x * g.sigma_v / s2.sqrt();
    let z_g = (v - m) / tau;

    if z_f <= 0.0 {
        a_amp * normal_cdf(z_f) - b_amp * normal_cdf(z_g)
    } else {
        (a_amp - b_amp) + (b_amp * normal_sf(z_g) - a_amp * normal_sf(z_f))
    }
}

/// Closed-form `∂_v U_t = F_t / ρ̃_t` for a Gaussian transport pair.
pub fn closed_form_gaussian_du(x: f64, v: f64, t: f64, f: &Gaussian2d, g: &Gaussian2d) -> GaussianDu {
    let weight = (1.0 - t) * f.eval(x, v) + t * g.eval(x + v, v);
    if weight.is_nan() || weight < GAUSSIAN_TAIL_WEIGHT {
        return GaussianDu { value: 0.0, tail: true };
    }
    GaussianDu { value: gaussian_cumulative_residual(x, v, f, g) / weight, tail: false }
}
