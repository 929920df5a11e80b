//! Energy evaluators: discrete SBV, sharp interface on the fitted mesh, and the
//! elliptic phase-field relaxation.

use serde::{Deserialize, Serialize};

use super::config::ProblemConfig;
use super::grid::{FaceSet, Grid, GridField};
use crate::error::{Error, Result};
use crate::phase_field::{PFParams, WeightForm};
use crate::robin::{StarShape, StateSolution};

/// Dirichlet, surface and volume parts of the insulation energy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub surface: f64,
    pub volume: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(dirichlet: f64, surface: f64, volume: f64) -> Self {
        EnergyBreakdown {
            dirichlet,
            surface,
            volume,
            total: dirichlet + surface + volume,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.dirichlet >= 0.0
            && self.surface >= 0.0
            && self.volume >= 0.0
            && self.total == self.dirichlet + self.surface + self.volume
    }
}

/// Thresholds that turn a grid field into a jump set and a positivity set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SBVParams {
    /// Adjacent-cell difference above which a face is a jump face.
    pub jump_threshold: f64,
    /// Cells with `u` above this count toward `{u > 0}`.
    pub positivity_cut: f64,
}

impl Default for SBVParams {
    fn default() -> Self {
        SBVParams {
            jump_threshold: 0.3,
            positivity_cut: 0.05,
        }
    }
}

impl SBVParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("jump_threshold", self.jump_threshold),
            ("positivity_cut", self.positivity_cut),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::precondition(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

/// Cells of `grid` whose centres lie in Ω, after checking that the grid covers Ω.
pub fn omega_cells(grid: &Grid, cfg: &ProblemConfig) -> Result<Vec<bool>> {
    let b = cfg.omega.bounding_box();
    let e = grid.extent();
    if b[0] < e[0] || b[1] < e[1] || b[2] > e[2] || b[3] > e[3] {
        return Err(Error::precondition(format!(
            "grid extent {e:?} does not cover Ω (bounding box {b:?})"
        )));
    }
    let mask = cfg.omega.rasterize(grid);
    if !mask.iter().any(|&m| m) {
        return Err(Error::precondition("grid is too coarse to resolve Ω"));
    }
    Ok(mask)
}

/// Discrete SBV energy of a cell field.
///
/// Faces whose adjacent values differ by more than the jump threshold contribute
/// `h (u_a² + u_b²)·length`: both traces count, so a jump between two positive
/// phases is charged twice. All other faces contribute the squared difference
/// quotient times the dual area. Cells outside Ω above the positivity cut pay
/// `C₀` per unit area.
pub fn energy_sbv(u: &GridField, cfg: &ProblemConfig, p: &SBVParams) -> Result<EnergyBreakdown> {
    p.validate()?;
    let jumps = FaceSet::jumps_of(u, p.jump_threshold);
    energy_with_jump_set(u, &jumps, cfg, p.positivity_cut)
}

/// Discrete energy of a pair `(u, K)` whose jump faces are given explicitly.
///
/// Faces in `K` contribute `h (u_a² + u_b²)·length`, all others the Dirichlet
/// term; the volume term counts cells outside Ω above `positivity_cut`.
pub fn energy_with_jump_set(
    u: &GridField,
    jumps: &FaceSet,
    cfg: &ProblemConfig,
    positivity_cut: f64,
) -> Result<EnergyBreakdown> {
    u.validate()?;
    let grid = u.grid();
    if !grid.same_as(&jumps.grid) {
        return Err(Error::precondition("jump set lives on a different grid"));
    }
    let omega = omega_cells(&grid, cfg)?;
    for (k, (&v, &inside)) in u.values.iter().zip(&omega).enumerate() {
        if inside && (v - 1.0).abs() > 1e-9 {
            let (i, j) = grid.coords(k);
            return Err(Error::precondition(format!(
                "cell ({i}, {j}) lies in Ω but holds u = {v}"
            )));
        }
    }
    let h = cfg.robin_h;
    let mut dirichlet = 0.0;
    let mut surface = 0.0;
    for f in grid.faces() {
        let (ua, ub) = (u.values[f.a], u.values[f.b]);
        if jumps.contains(&f) {
            surface += h * (ua * ua + ub * ub) * f.length;
        } else {
            let d = ua - ub;
            dirichlet += d * d * f.length / f.distance;
        }
    }
    let positive = u
        .values
        .iter()
        .zip(&omega)
        .filter(|(&v, &inside)| !inside && v > positivity_cut)
        .count();
    let volume = cfg.volume_cost * positive as f64 * grid.cell_area();
    Ok(EnergyBreakdown::new(dirichlet, surface, volume))
}

/// Sharp-interface energy of a solved state, by trapezoidal quadrature on the
/// boundary-fitted mesh.
pub fn energy_sharp(
    state: &StateSolution,
    shape: &StarShape,
    cfg: &ProblemConfig,
) -> Result<EnergyBreakdown> {
    if state.shape != *shape {
        return Err(Error::precondition("state was solved on a different shape"));
    }
    if state.robin_h != cfg.robin_h || state.volume_cost != cfg.volume_cost {
        return Err(Error::precondition("state was solved with different parameters"));
    }
    shape.check_admissible(cfg, state.gap_min, state.n_theta)?;
    Ok(state.quadrature_energy())
}

/// Smooth step used for the volume term: `clamp(u/δ, 0, 1)`.
#[inline]
pub fn volume_step(u: f64, delta: f64) -> f64 {
    (u / delta).clamp(0.0, 1.0)
}

/// Per-cell surface weight `h·q(u) + η` of the phase-field functional.
pub(crate) fn surface_weights(u: &GridField, cfg: &ProblemConfig, p: &PFParams) -> Vec<f64> {
    let grid = u.grid();
    let h = cfg.robin_h;
    (0..grid.len())
        .map(|k| {
            let uk = u.values[k];
            let q = match p.weight_form {
                WeightForm::TwoU2 => 2.0 * uk * uk,
                WeightForm::TraceSumProxy => {
                    let partner = partner_value(u, &grid, k);
                    uk * uk + partner * partner
                }
            };
            h * q + p.surface_floor
        })
        .collect()
}

/// Value of the 4-neighbour across the largest difference; the cell's own value
/// when it has no neighbours.
pub(crate) fn partner_value(u: &GridField, grid: &Grid, k: usize) -> f64 {
    let uk = u.values[k];
    grid.neighbors(k)
        .map(|n| u.values[n])
        .max_by(|a, b| (a - uk).abs().total_cmp(&(b - uk).abs()))
        .unwrap_or(uk)
}

/// Phase-field energy evaluated with exactly the stencils the minimizer uses:
///
/// `Σ_f ((z_a²+z_b²)/2 + k)(Δu)² w_f`
/// `+ Σ_f ε s_f (Δz)² w_f + Σ_i A s_i (1-z_i)²/(4ε)`
/// `+ C₀ Σ_{i∉Ω} A σ_δ(u_i)`
///
/// with `w_f = length/distance`, `s_i = h q(u_i) + η` and `s_f` the face average.
pub fn energy_phase_field(
    u: &GridField,
    z: &GridField,
    eps: f64,
    cfg: &ProblemConfig,
    p: &PFParams,
) -> Result<EnergyBreakdown> {
    u.validate()?;
    z.validate()?;
    if !u.same_grid(z) {
        return Err(Error::precondition("u and z live on different grids"));
    }
    if !(eps > 0.0) {
        return Err(Error::precondition("ε must be positive"));
    }
    let omega = omega_cells(&u.grid(), cfg)?;
    Ok(phase_field_energy_unchecked(u, z, eps, cfg, p, &omega))
}

pub(crate) fn phase_field_energy_unchecked(
    u: &GridField,
    z: &GridField,
    eps: f64,
    cfg: &ProblemConfig,
    p: &PFParams,
    omega: &[bool],
) -> EnergyBreakdown {
    let grid = u.grid();
    let area = grid.cell_area();
    let s = surface_weights(u, cfg, p);
    let mut dirichlet = 0.0;
    let mut surface = 0.0;
    for f in grid.faces() {
        let w = f.length / f.distance;
        let du = u.values[f.a] - u.values[f.b];
        let dz = z.values[f.a] - z.values[f.b];
        let (za, zb) = (z.values[f.a], z.values[f.b]);
        dirichlet += (0.5 * (za * za + zb * zb) + p.k_eps) * du * du * w;
        surface += eps * 0.5 * (s[f.a] + s[f.b]) * dz * dz * w;
    }
    let mut volume = 0.0;
    for k in 0..grid.len() {
        let one_minus = 1.0 - z.values[k];
        surface += area * s[k] * one_minus * one_minus / (4.0 * eps);
        if !omega[k] {
            volume += area * volume_step(u.values[k], p.delta_cut);
        }
    }
    EnergyBreakdown::new(dirichlet, surface, cfg.volume_cost * volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::OmegaSpec;
    use std::f64::consts::PI;

    fn unit_cfg(rho0: f64) -> ProblemConfig {
        ProblemConfig::disk(1.0, 1.0, rho0).unwrap()
    }

    #[test]
    fn breakdown_total_is_exact_sum() {
        let e = EnergyBreakdown::new(0.1, 0.2, 0.3);
        assert!(e.is_consistent());
        assert_eq!(e.total, 0.1 + 0.2 + 0.3);
    }

    #[test]
    fn single_face_jump() {
        // two cells, left one holds Ω (a tiny disk inside it)
        let g = Grid::new(3, 1, [0.0, 0.0], [0.01, 0.01]).unwrap();
        let cfg = ProblemConfig::new(2, 1.0, 0.0, OmegaSpec::disk([0.005, 0.005], 0.001)).unwrap();
        let u = GridField::from_values(g, vec![1.0, 0.8, 0.1]).unwrap();
        let p = SBVParams {
            jump_threshold: 0.5,
            positivity_cut: 0.05,
        };
        let e = energy_sbv(&u, &cfg, &p).unwrap();
        // face 1.0|0.8 is smooth, face 0.8|0.1 is a jump
        assert!((e.surface - (0.64 + 0.01) * 0.01).abs() < 1e-15);
        assert!((e.dirichlet - 0.04).abs() < 1e-14);
    }

    #[test]
    fn constant_one_field_pays_only_volume() {
        let g = Grid::square(40, [0.0, 0.0], 2.0);
        let cfg = unit_cfg(1.0);
        let u = GridField::filled(g, 1.0);
        let e = energy_sbv(&u, &cfg, &SBVParams::default()).unwrap();
        let omega = cfg.omega.rasterize(&g).iter().filter(|&&b| b).count() as f64;
        assert_eq!(e.dirichlet, 0.0);
        assert_eq!(e.surface, 0.0);
        assert!((e.volume - (16.0 - omega * g.cell_area())).abs() < 1e-12);
    }

    #[test]
    fn disk_indicator_energy() {
        let n = 400;
        let g = Grid::square(n, [0.0, 0.0], 2.0);
        let cfg = unit_cfg(0.5);
        let r_big = 1.5;
        let u = GridField::from_fn(g, |p| if p[0].hypot(p[1]) < r_big { 1.0 } else { 0.0 });
        let e = energy_sbv(&u, &cfg, &SBVParams::default()).unwrap();
        assert_eq!(e.dirichlet, 0.0);
        // axis-aligned face counting measures the l1 perimeter 8R
        let ratio = e.surface / (2.0 * PI * r_big);
        assert!((ratio - 4.0 / PI).abs() < 0.01, "ratio {ratio}");
        assert!((e.volume - PI * (r_big * r_big - 0.25)).abs() < 0.02);
    }

    #[test]
    fn rejects_grid_not_covering_omega_and_bad_values() {
        let g = Grid::square(10, [0.0, 0.0], 0.5);
        let cfg = unit_cfg(1.0);
        let u = GridField::filled(g, 1.0);
        assert!(energy_sbv(&u, &cfg, &SBVParams::default()).is_err());
        let g = Grid::square(10, [0.0, 0.0], 2.0);
        let mut u = GridField::filled(g, 0.0);
        assert!(energy_sbv(&u, &cfg, &SBVParams::default()).is_err());
        u.values.iter_mut().for_each(|v| *v = 1.0);
        u.values[0] = f64::INFINITY;
        assert!(energy_sbv(&u, &cfg, &SBVParams::default()).is_err());
    }

    #[test]
    fn phase_field_constant_fields() {
        let g = Grid::square(32, [0.0, 0.0], 2.0);
        let cfg = unit_cfg(1.0);
        let p = PFParams::for_spacing(g.spacing[0]);
        let one = GridField::filled(g, 1.0);
        let e = energy_phase_field(&one, &one, 4.0 * g.spacing[0], &cfg, &p).unwrap();
        let omega = cfg.omega.rasterize(&g).iter().filter(|&&b| b).count() as f64;
        assert_eq!(e.dirichlet, 0.0);
        assert_eq!(e.surface, 0.0);
        assert!((e.total - (16.0 - omega * g.cell_area())).abs() < 1e-12);
    }
}
