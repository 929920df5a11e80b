//! Numerical optimizer and verification suite for the thermal insulation
//! free-boundary problem: minimize
//!
//! ```text
//! F(A, u) = ∫_A |∇u|² + h ∮_{∂A} u² + C₀ |A ∖ Ω|
//! ```
//!
//! over insulators `A ⊇ Ω` and temperatures with `u = 1` on `Ω`.
//!
//! * [`radial`] — closed-form concentric solutions, the oracle for everything else.
//! * [`robin`] — state solve on a star-shaped insulator (boundary-fitted mesh).
//! * [`shape_opt`] — shape gradients and projected gradient descent.
//! * [`phase_field`] — topology-free relaxation on a Cartesian grid.
//! * [`analysis`] — lower bound, density, blow-up and hole diagnostics.
//! * [`cli`] — configuration files, artifacts and the command line runner.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod phase_field;
pub mod radial;
pub mod robin;
pub mod shape_opt;

pub use error::{Error, Result};
pub use model::{
    energy_phase_field, energy_sbv, energy_sharp, energy_with_jump_set, CellMask, Disk, EnergyBreakdown, FaceSet,
    FourierCurve, Grid, GridField, OmegaSpec, ProblemConfig, SBVParams,
};
pub use radial::{optimize_radius, radial_energy, radial_profile, RadialOptimum, RadialSolution};
pub use robin::{energy_from_flux, solve_state, StarShape, StateOptions, StateSolution};
