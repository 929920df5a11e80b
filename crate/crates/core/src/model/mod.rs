//! Problem configuration, grid carriers and the energy evaluators shared by
//! every solver.

pub mod config;
pub mod energy;
pub mod fourier;
pub mod grid;

pub use config::{Disk, OmegaSpec, ProblemConfig};
pub use energy::{
    energy_phase_field, energy_sbv, energy_sharp, energy_with_jump_set, omega_cells, EnergyBreakdown, SBVParams,
};
pub use fourier::FourierCurve;
pub use grid::{CellMask, Face, FaceSet, Grid, GridField};
