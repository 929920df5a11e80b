//! Closed-form state and energy for a ball Ω = B_ρ₀ insulated by a concentric
//! ball B_R, and the one-dimensional optimization over R.
//!
//! In the plane the harmonic profile is `u = 1 + c ln(r/ρ₀)`; in space it is
//! `u = a + b/r`. Both are fixed by `u(ρ₀) = 1` and the Robin condition
//! `u'(R) + h u(R) = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EnergyBreakdown;

/// Radial profile `u(r) = a + c·φ(r)` with `φ = ln(r/ρ₀)` (n = 2) or `φ = 1/r` (n = 3).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub n: usize,
    pub h: f64,
    pub rho0: f64,
    pub r_outer: f64,
    pub a: f64,
    pub c: f64,
    /// `u(R)`.
    pub u_outer: f64,
    /// Dirichlet and surface parts; the volume part is zero here and is added by
    /// [`radial_energy`], which knows `C₀`.
    pub energy: EnergyBreakdown,
}

impl RadialSolution {
    pub fn value(&self, r: f64) -> f64 {
        match self.n {
            2 => self.a + self.c * (r / self.rho0).ln(),
            _ => self.a + self.c / r,
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self.n {
            2 => self.c / r,
            _ => -self.c / (r * r),
        }
    }

    /// `u'(R) + h u(R)`.
    pub fn robin_residual(&self) -> f64 {
        self.derivative(self.r_outer) + self.h * self.value(self.r_outer)
    }

    /// `u(ρ₀) - 1`.
    pub fn dirichlet_residual(&self) -> f64 {
        self.value(self.rho0) - 1.0
    }

    /// Heat flux `∮_{∂Ω} -∂_ν u`.
    pub fn flux(&self) -> f64 {
        sphere_area(self.n, self.rho0) * -self.derivative(self.rho0)
    }

    pub fn is_degenerate(&self) -> bool {
        self.r_outer == self.rho0
    }
}

fn sphere_area(n: usize, r: f64) -> f64 {
    if n == 2 {
        2.0 * PI * r
    } else {
        4.0 * PI * r * r
    }
}

fn ball_volume(n: usize, r: f64) -> f64 {
    if n == 2 {
        PI * r * r
    } else {
        4.0 / 3.0 * PI * r * r * r
    }
}

fn check_inputs(n: usize, h: f64, rho0: f64, r: f64) -> Result<()> {
    if n != 2 && n != 3 {
        return Err(Error::precondition(format!("dimension must be 2 or 3, got {n}")));
    }
    if !(rho0 > 0.0) || !rho0.is_finite() {
        return Err(Error::precondition(format!("ρ₀ must be positive, got {rho0}")));
    }
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::precondition(format!("h must be ≥ 0, got {h}")));
    }
    if !(r >= rho0) || !r.is_finite() {
        return Err(Error::precondition(format!("outer radius {r} is smaller than ρ₀ = {rho0}")));
    }
    Ok(())
}

/// Harmonic profile in the shell `ρ₀ < r < R` with Robin data at `R`.
///
/// `R = ρ₀` gives the zero-thickness solution `u ≡ 1`, `c = 0`.
pub fn radial_profile(n: usize, h: f64, rho0: f64, r_outer: f64) -> Result<RadialSolution> {
    check_inputs(n, h, rho0, r_outer)?;
    let (a, c) = if r_outer == rho0 || h == 0.0 {
        (1.0, 0.0)
    } else if n == 2 {
        (1.0, -h / (1.0 / r_outer + h * (r_outer / rho0).ln()))
    } else {
        let b = h / (1.0 / (r_outer * r_outer) + h / rho0 - h / r_outer);
        (1.0 - b / rho0, b)
    };
    let mut sol = RadialSolution {
        n,
        h,
        rho0,
        r_outer,
        a,
        c,
        u_outer: 0.0,
        energy: EnergyBreakdown::default(),
    };
    sol.u_outer = sol.value(r_outer).clamp(0.0, 1.0);
    let dirichlet = if n == 2 {
        2.0 * PI * c * c * (r_outer / rho0).ln()
    } else {
        4.0 * PI * c * c * (1.0 / rho0 - 1.0 / r_outer)
    };
    let surface = h * sphere_area(n, r_outer) * sol.u_outer * sol.u_outer;
    sol.energy = EnergyBreakdown::new(dirichlet, surface, 0.0);
    Ok(sol)
}

/// Insulation energy of the concentric configuration.
pub fn radial_energy(n: usize, h: f64, c0: f64, rho0: f64, r_outer: f64) -> Result<EnergyBreakdown> {
    if !(c0 >= 0.0) || !c0.is_finite() {
        return Err(Error::precondition(format!("C₀ must be ≥ 0, got {c0}")));
    }
    let sol = radial_profile(n, h, rho0, r_outer)?;
    let volume = c0 * (ball_volume(n, r_outer) - ball_volume(n, rho0));
    Ok(EnergyBreakdown::new(sol.energy.dirichlet, sol.energy.surface, volume))
}

/// Closed-form `dF/dR` for `R > ρ₀`.
pub fn radial_energy_derivative(n: usize, h: f64, c0: f64, rho0: f64, r: f64) -> Result<f64> {
    check_inputs(n, h, rho0, r)?;
    if n == 2 {
        // D + S = 2πh / (1/R + h ln(R/ρ₀))
        let den = 1.0 / r + h * (r / rho0).ln();
        Ok(-2.0 * PI * h * (-1.0 / (r * r) + h / r) / (den * den) + 2.0 * PI * c0 * r)
    } else {
        // D + S = 4πb with b = h / (1/R² + h/ρ₀ - h/R)
        let den = 1.0 / (r * r) + h / rho0 - h / r;
        let dden = -2.0 / (r * r * r) + h / (r * r);
        Ok(-4.0 * PI * h * dden / (den * den) + 4.0 * PI * c0 * r * r)
    }
}

/// Outcome of [`optimize_radius`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialOptimum {
    pub r_star: f64,
    pub f_star: f64,
    pub energy: EnergyBreakdown,
    /// Right end of the search interval.
    pub r_max: f64,
    /// False when the infimum is not attained (`C₀ = 0`).
    pub attained: bool,
    pub warning: Option<String>,
}

/// Search interval used when `C₀ = 0` and the volume argument gives no bound.
pub const UNBOUNDED_R_MAX_FACTOR: f64 = 1.0e3;

/// Minimizes the radial energy over `R ∈ [ρ₀, R_max]`.
///
/// `R_max = ρ₀ + 2 (F(ρ₀)/C₀)^{1/n}`. A coarse scan brackets the global minimum,
/// golden-section search shrinks the bracket to `1e-10·ρ₀`, and a final
/// bisection on the closed-form derivative removes the round-off floor of
/// comparing nearly equal energies. The interior candidate is compared with
/// the endpoint `R = ρ₀`.
pub fn optimize_radius(n: usize, h: f64, c0: f64, rho0: f64) -> Result<RadialOptimum> {
    check_inputs(n, h, rho0, rho0)?;
    if !(c0 >= 0.0) || !c0.is_finite() {
        return Err(Error::precondition(format!("C₀ must be ≥ 0, got {c0}")));
    }
    let f = |r: f64| radial_energy(n, h, c0, rho0, r).map(|e| e.total);
    let f_left = f(rho0)?;
    let (r_max, warning) = if c0 == 0.0 {
        (
            UNBOUNDED_R_MAX_FACTOR * rho0,
            Some("C₀ = 0: the infimum is approached as R → ∞ and is not attained".to_string()),
        )
    } else {
        (rho0 + 2.0 * (f_left / c0).powf(1.0 / n as f64), None)
    };
    let attained = warning.is_none();

    if !attained {
        let energy = radial_energy(n, h, c0, rho0, r_max)?;
        log::warn!("{}", warning.as_deref().unwrap_or_default());
        return Ok(RadialOptimum {
            r_star: r_max,
            f_star: energy.total,
            energy,
            r_max,
            attained,
            warning,
        });
    }
    if r_max - rho0 <= 1e-10 * rho0 {
        let energy = radial_energy(n, h, c0, rho0, rho0)?;
        return Ok(RadialOptimum {
            r_star: rho0,
            f_star: energy.total,
            energy,
            r_max,
            attained,
            warning,
        });
    }

    // coarse scan for the basin of the global minimum
    let samples = 2000;
    let step = (r_max - rho0) / samples as f64;
    let mut best = (0usize, f_left);
    for k in 1..=samples {
        let v = f(rho0 + k as f64 * step)?;
        if v < best.1 {
            best = (k, v);
        }
    }
    let mut lo = rho0 + best.0.saturating_sub(1) as f64 * step;
    let mut hi = (rho0 + (best.0 + 1) as f64 * step).min(r_max);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let tol = 1e-10 * rho0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let mut r_int = 0.5 * (lo + hi);
    if r_int > rho0 {
        r_int = polish_stationary_point(n, h, c0, rho0, r_int, step)?;
    }

    let e_int = radial_energy(n, h, c0, rho0, r_int)?;
    let e_left = radial_energy(n, h, c0, rho0, rho0)?;
    let (r_star, energy) = if e_left.total <= e_int.total {
        (rho0, e_left)
    } else {
        (r_int, e_int)
    };
    Ok(RadialOptimum {
        r_star,
        f_star: energy.total,
        energy,
        r_max,
        attained,
        warning,
    })
}

/// Bisection on `F'` inside a small window around a golden-section estimate.
/// Returns the estimate unchanged when the window shows no sign change.
fn polish_stationary_point(n: usize, h: f64, c0: f64, rho0: f64, r: f64, window: f64) -> Result<f64> {
    let df = |x: f64| radial_energy_derivative(n, h, c0, rho0, x);
    let mut lo = (r - window).max(rho0 * (1.0 + 1e-14));
    let mut hi = r + window;
    let (mut dlo, dhi) = (df(lo)?, df(hi)?);
    if !(dlo < 0.0 && dhi > 0.0) {
        return Ok(r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let dm = df(mid)?;
        if (dm < 0.0) == (dlo < 0.0) {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn planar_profile_at_r_equals_e() {
        let s = radial_profile(2, 1.0, 1.0, E).unwrap();
        assert!((s.c + E / (1.0 + E)).abs() < 1e-15);
        assert!((s.u_outer - 1.0 / (1.0 + E)).abs() < 1e-15);
        assert!(s.robin_residual().abs() < 1e-15);
    }

    #[test]
    fn zero_thickness_and_neumann_limits() {
        for n in [2, 3] {
            let s = radial_profile(n, 2.0, 1.5, 1.5).unwrap();
            assert_eq!(s.c, 0.0);
            assert_eq!(s.value(1.5), 1.0);
            let s = radial_profile(n, 1e-12, 1.0, 3.0).unwrap();
            assert!((s.value(3.0) - 1.0).abs() < 1e-10);
        }
        let e = radial_energy(2, 1.3, 1.0, 0.7, 0.7).unwrap();
        assert!((e.total - 1.3 * (2.0 * PI * 0.7)).abs() < 1e-15);
    }

    #[test]
    fn flux_identity_both_dimensions() {
        for n in [2, 3] {
            let s = radial_profile(n, 1.7, 0.8, 2.1).unwrap();
            let e = s.energy;
            assert!((e.dirichlet + e.surface - s.flux()).abs() < 1e-13 * s.flux());
        }
    }

    #[test]
    fn rejects_inverted_shell() {
        assert!(radial_profile(2, 1.0, 2.0, 1.0).is_err());
        assert!(radial_profile(4, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for n in [2, 3] {
            let r = 1.7;
            let step = 1e-6;
            let fd = (radial_energy(n, 2.0, 0.5, 1.0, r + step).unwrap().total
                - radial_energy(n, 2.0, 0.5, 1.0, r - step).unwrap().total)
                / (2.0 * step);
            let d = radial_energy_derivative(n, 2.0, 0.5, 1.0, r).unwrap();
            assert!((fd - d).abs() < 1e-7 * d.abs().max(1.0));
        }
    }

    #[test]
    fn optimum_cases() {
        let o = optimize_radius(2, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(o.r_star, 1.0);
        assert_eq!(o.f_star, 0.0);
        let o = optimize_radius(2, 1.0, 1e6, 1.0).unwrap();
        assert_eq!(o.r_star, 1.0);
        assert_eq!(o.f_star, 2.0 * PI);
        // h = 3 favours a genuine insulating layer
        let o = optimize_radius(2, 3.0, 1.0, 1.0).unwrap();
        assert!(o.r_star > 1.4 && o.r_star < 1.5, "{}", o.r_star);
        assert!(radial_energy_derivative(2, 3.0, 1.0, 1.0, o.r_star).unwrap().abs() < 1e-8);
        let o = optimize_radius(2, 1.0, 0.0, 1.0).unwrap();
        assert!(!o.attained && o.warning.is_some());
    }
}
