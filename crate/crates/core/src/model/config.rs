use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fourier::FourierCurve;
use super::grid::{Grid, GridField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        dx * dx + dy * dy < self.radius * self.radius
    }
}

/// The heated body Ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OmegaSpec {
    Disk(Disk),
    /// Star-shaped domain `{center + ρ e(θ) : ρ < ρ_Ω(θ)}`.
    StarDomain { center: [f64; 2], radius: FourierCurve },
    /// Union of disjoint disks; used for bodies with several components.
    DiskUnion(Vec<Disk>),
    /// Cell mask (values > 0.5 belong to Ω).
    GridMask(GridField),
}

impl OmegaSpec {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        OmegaSpec::Disk(Disk { center, radius })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OmegaSpec::Disk(d) => validate_disk(d),
            OmegaSpec::StarDomain { radius, .. } => {
                let n = 64 * (radius.modes() + 1);
                for j in 0..n {
                    let t = 2.0 * PI * j as f64 / n as f64;
                    let r = radius.radius(t);
                    if !(r > 0.0) {
                        return Err(Error::precondition(format!(
                            "star domain radius {r} is not positive at θ = {t:.4}"
                        )));
                    }
                }
                Ok(())
            }
            OmegaSpec::DiskUnion(disks) => {
                if disks.is_empty() {
                    return Err(Error::precondition("disk union is empty"));
                }
                for d in disks {
                    validate_disk(d)?;
                }
                for (a, da) in disks.iter().enumerate() {
                    for db in &disks[a + 1..] {
                        let dist = ((da.center[0] - db.center[0]).powi(2)
                            + (da.center[1] - db.center[1]).powi(2))
                        .sqrt();
                        if dist <= da.radius + db.radius {
                            return Err(Error::precondition("disks of a union must be disjoint"));
                        }
                    }
                }
                Ok(())
            }
            OmegaSpec::GridMask(field) => {
                field.validate()?;
                let grid = field.grid();
                let inside: Vec<bool> = field.values.iter().map(|&v| v > 0.5).collect();
                let Some(start) = inside.iter().position(|&b| b) else {
                    return Err(Error::precondition("grid mask for Ω is empty"));
                };
                let mut seen = vec![false; inside.len()];
                let mut queue = VecDeque::from([start]);
                seen[start] = true;
                let mut reached = 1;
                while let Some(k) = queue.pop_front() {
                    for n in grid.neighbors(k) {
                        if inside[n] && !seen[n] {
                            seen[n] = true;
                            reached += 1;
                            queue.push_back(n);
                        }
                    }
                }
                if reached != inside.iter().filter(|&&b| b).count() {
                    return Err(Error::precondition("grid mask for Ω is not connected"));
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            OmegaSpec::Disk(d) => d.contains(p),
            OmegaSpec::StarDomain { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let rr = (dx * dx + dy * dy).sqrt();
                rr < radius.radius(dy.atan2(dx))
            }
            OmegaSpec::DiskUnion(disks) => disks.iter().any(|d| d.contains(p)),
            OmegaSpec::GridMask(field) => {
                let g = field.grid();
                let fi = ((p[0] - g.origin[0]) / g.spacing[0]).floor();
                let fj = ((p[1] - g.origin[1]) / g.spacing[1]).floor();
                if fi < 0.0 || fj < 0.0 || fi >= g.nx as f64 || fj >= g.ny as f64 {
                    return false;
                }
                field.get(fi as usize, fj as usize) > 0.5
            }
        }
    }

    /// `[xmin, ymin, xmax, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        match self {
            OmegaSpec::Disk(d) => disk_box(d),
            OmegaSpec::StarDomain { center, radius } => {
                let n = 64 * (radius.modes() + 1);
                let mut b = [f64::MAX, f64::MAX, f64::MIN, f64::MIN];
                for j in 0..n {
                    let t = 2.0 * PI * j as f64 / n as f64;
                    // small safety factor covers the gaps between samples
                    let r = radius.radius(t) * (1.0 + 1e-3);
                    let p = [center[0] + r * t.cos(), center[1] + r * t.sin()];
                    b = [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])];
                }
                b
            }
            OmegaSpec::DiskUnion(disks) => disks.iter().map(disk_box).fold(
                [f64::MAX, f64::MAX, f64::MIN, f64::MIN],
                |b, d| [b[0].min(d[0]), b[1].min(d[1]), b[2].max(d[2]), b[3].max(d[3])],
            ),
            OmegaSpec::GridMask(field) => {
                let g = field.grid();
                let mut b = [f64::MAX, f64::MAX, f64::MIN, f64::MIN];
                for (k, &v) in field.values.iter().enumerate() {
                    if v > 0.5 {
                        let (i, j) = g.coords(k);
                        let x0 = g.origin[0] + i as f64 * g.spacing[0];
                        let y0 = g.origin[1] + j as f64 * g.spacing[1];
                        b = [
                            b[0].min(x0),
                            b[1].min(y0),
                            b[2].max(x0 + g.spacing[0]),
                            b[3].max(y0 + g.spacing[1]),
                        ];
                    }
                }
                b
            }
        }
    }

    /// Exact area |Ω| (cell count for masks).
    pub fn area(&self) -> f64 {
        match self {
            OmegaSpec::Disk(d) => PI * d.radius * d.radius,
            OmegaSpec::StarDomain { radius, .. } => radius.area(),
            OmegaSpec::DiskUnion(disks) => disks.iter().map(|d| PI * d.radius * d.radius).sum(),
            OmegaSpec::GridMask(field) => {
                field.values.iter().filter(|&&v| v > 0.5).count() as f64
                    * field.spacing[0]
                    * field.spacing[1]
            }
        }
    }

    /// Perimeter |∂Ω| (face count for masks).
    pub fn perimeter(&self) -> f64 {
        match self {
            OmegaSpec::Disk(d) => 2.0 * PI * d.radius,
            OmegaSpec::StarDomain { radius, .. } => radius.perimeter(1024.max(64 * radius.modes())),
            OmegaSpec::DiskUnion(disks) => disks.iter().map(|d| 2.0 * PI * d.radius).sum(),
            OmegaSpec::GridMask(field) => {
                super::grid::CellMask::from_field(field).boundary_length()
            }
        }
    }

    /// Largest disk component, used to seed radial initial guesses.
    pub fn primary_disk(&self) -> Option<Disk> {
        match self {
            OmegaSpec::Disk(d) => Some(*d),
            OmegaSpec::DiskUnion(disks) => disks
                .iter()
                .copied()
                .max_by(|a, b| a.radius.total_cmp(&b.radius)),
            _ => None,
        }
    }

    /// Boundary radius `ρ_Ω(θ)` and `dρ_Ω/dθ` seen from `center`.
    ///
    /// Available for disks containing `center` and for star domains centred at `center`.
    pub fn radial_function(&self, center: [f64; 2], theta: f64) -> Result<(f64, f64)> {
        match self {
            OmegaSpec::Disk(d) => {
                let w = [center[0] - d.center[0], center[1] - d.center[1]];
                let w2 = w[0] * w[0] + w[1] * w[1];
                if w2 >= d.radius * d.radius {
                    return Err(Error::precondition("shape centre lies outside the Ω disk"));
                }
                let (s, c) = theta.sin_cos();
                let we = w[0] * c + w[1] * s;
                let wp = -w[0] * s + w[1] * c;
                let root = (we * we - w2 + d.radius * d.radius).sqrt();
                let rho = -we + root;
                let drho = -wp + we * wp / root;
                Ok((rho, drho))
            }
            OmegaSpec::StarDomain { center: c, radius } => {
                if (c[0] - center[0]).abs() > 1e-14 || (c[1] - center[1]).abs() > 1e-14 {
                    return Err(Error::precondition(
                        "star-shaped Ω must share its centre with the insulator shape",
                    ));
                }
                let (r, dr, _) = radius.eval(theta);
                Ok((r, dr))
            }
            OmegaSpec::DiskUnion(_) | OmegaSpec::GridMask(_) => Err(Error::precondition(
                "the boundary-fitted solver needs Ω to be a disk or a star domain",
            )),
        }
    }

    /// Cells whose centres lie in Ω.
    pub fn rasterize(&self, grid: &Grid) -> Vec<bool> {
        (0..grid.len()).map(|k| self.contains(grid.center_of(k))).collect()
    }
}

fn validate_disk(d: &Disk) -> Result<()> {
    if !(d.radius > 0.0) || !d.radius.is_finite() {
        return Err(Error::precondition(format!(
            "disk radius must be positive, got {}",
            d.radius
        )));
    }
    Ok(())
}

fn disk_box(d: &Disk) -> [f64; 4] {
    [
        d.center[0] - d.radius,
        d.center[1] - d.radius,
        d.center[0] + d.radius,
        d.center[1] + d.radius,
    ]
}

/// Physical parameters of one insulation problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    /// Space dimension, 2 or 3.
    pub dim: usize,
    /// Robin coefficient `h`.
    pub robin_h: f64,
    /// Cost per unit volume of insulator, `C₀`.
    pub volume_cost: f64,
    pub omega: OmegaSpec,
    /// Permits `h = 0` for degenerate test runs.
    pub allow_degenerate: bool,
}

impl ProblemConfig {
    pub fn new(dim: usize, robin_h: f64, volume_cost: f64, omega: OmegaSpec) -> Result<Self> {
        let cfg = ProblemConfig {
            dim,
            robin_h,
            volume_cost,
            omega,
            allow_degenerate: robin_h == 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Planar problem with Ω the disk of radius `rho0` centred at the origin.
    pub fn disk(robin_h: f64, volume_cost: f64, rho0: f64) -> Result<Self> {
        Self::new(2, robin_h, volume_cost, OmegaSpec::disk([0.0, 0.0], rho0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::precondition(format!("dimension must be 2 or 3, got {}", self.dim)));
        }
        if !self.robin_h.is_finite() || self.robin_h < 0.0 {
            return Err(Error::precondition(format!("robin_h must be ≥ 0, got {}", self.robin_h)));
        }
        if self.robin_h == 0.0 && !self.allow_degenerate {
            return Err(Error::precondition(
                "robin_h = 0 requires the degenerate-run flag",
            ));
        }
        if !self.volume_cost.is_finite() || self.volume_cost < 0.0 {
            return Err(Error::precondition(format!(
                "volume_cost must be ≥ 0, got {}",
                self.volume_cost
            )));
        }
        self.omega.validate()
    }

    pub fn require_planar(&self) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::precondition("field solvers are planar (dim = 2)"));
        }
        Ok(())
    }

    /// Energy of the detached competitor `A = Ω`: `h·|∂Ω|`.
    pub fn detached_energy(&self) -> f64 {
        self.robin_h * self.omega.perimeter()
    }
}
