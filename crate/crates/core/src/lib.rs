//! Moser-type acceleration fields for the kinetic Liouville equation.
//!
//! Given two positive phase-space densities `f` and `g` on `X × V`, the
//! pipeline checks the velocity-marginal compatibility condition
//! `∫ f(x, v) dv = ∫ g(x + v, v) dv`, solves a weighted elliptic problem in
//! `v` for every `(x, t)`, and assembles the force field
//! `a(x, v, t) = ∂_v U_t(x − t v, v)` that carries `f` to `g` in unit time.
//! A conservative Strang-split finite-volume solver integrates the
//! Liouville equation with that field to validate the construction.

pub mod cli;
pub mod densities;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod grid;
pub mod liouville;
pub mod snapshot;

pub use densities::{
    check_compatibility, interpolant, shift_map, velocity_marginal, CompatReport, DensitySpec, Preset,
};
pub use diagnostics::{convergence_study, exact_path, l1_error, run_table1, DiagnosticsRecord};
pub use elliptic::{
    closed_form_gaussian_du, closed_form_torus_du, elliptic_residual, solve_profile, VelocityPotentialProfile,
};
pub use error::{Error, Result};
pub use field::{build_field, AccelerationField, FieldMethod};
pub use grid::{cell_centers, integrate, wrap_x, Boundary, DensityArray, PhaseGrid, VelocityAxis};
pub use liouville::{compute_dt, simulate, strang_step, sweep_v, sweep_x, SimulationState, SolverConfig};
