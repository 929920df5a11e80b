//! State solve on a star-shaped insulator: `Δu = 0` in `A∖Ω`, `u = 1` on `∂Ω`,
//! `∂_ν u + h u = 0` on `∂A`.
//!
//! The annular region is mapped to `(s, θ) ∈ [0,1] × [0, 2π)` by
//! `r(s, θ) = ρ_Ω(θ) + s (r_A(θ) − ρ_Ω(θ))`. The discrete problem is the exact
//! minimizer of a quadrature of the energy
//!
//! ```text
//! ∫∫ A_ss u_s² + 2 A_sθ u_s u_θ + A_θθ u_θ²  ds dθ  +  h ∮ u² dσ
//! A_ss = (r² + r_θ²)/(r r_s),  A_sθ = −r_θ/r,  A_θθ = r_s/r
//! ```
//!
//! with edge-centred differences for the diagonal terms and cell-centred ones
//! for the mixed term. Because `u` minimizes the very functional whose value is
//! reported, the discrete energy satisfies the envelope identity exactly, which
//! is what the finite-difference shape gradients rely on.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_banded, BandedSpd};
use crate::model::{EnergyBreakdown, FourierCurve, OmegaSpec, ProblemConfig};

/// Candidate insulator boundary `center + r(θ) e(θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarShape {
    pub center: [f64; 2],
    pub radius: FourierCurve,
}

impl StarShape {
    pub fn circle(center: [f64; 2], radius: f64, modes: usize) -> Self {
        StarShape {
            center,
            radius: FourierCurve::circle(radius, modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.radius.modes()
    }

    pub fn translated(&self, offset: [f64; 2]) -> Self {
        StarShape {
            center: [self.center[0] + offset[0], self.center[1] + offset[1]],
            radius: self.radius.clone(),
        }
    }

    /// Boundary point at angle θ.
    pub fn point(&self, theta: f64) -> [f64; 2] {
        let r = self.radius.radius(theta);
        [self.center[0] + r * theta.cos(), self.center[1] + r * theta.sin()]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        dx.hypot(dy) < self.radius.radius(dy.atan2(dx))
    }

    /// Smallest `r(θ) − ρ_Ω(θ)` over `samples` equally spaced angles.
    pub fn min_gap(&self, omega: &OmegaSpec, samples: usize) -> Result<f64> {
        let mut gap = f64::MAX;
        for j in 0..samples {
            let t = 2.0 * PI * j as f64 / samples as f64;
            let (rho, _) = omega.radial_function(self.center, t)?;
            gap = gap.min(self.radius.radius(t) - rho);
        }
        Ok(gap)
    }

    /// Checks `r(θ) ≥ ρ_Ω(θ) + gap_min` on a sampling four times finer than the mesh.
    pub fn check_admissible(&self, cfg: &ProblemConfig, gap_min: f64, n_theta: usize) -> Result<()> {
        cfg.require_planar()?;
        let samples = (4 * n_theta).max(64 * (self.modes() + 1));
        let gap = self.min_gap(&cfg.omega, samples)?;
        if !(gap >= gap_min) {
            return Err(Error::precondition(format!(
                "shape violates the minimum gap: min(r − ρ_Ω) = {gap:.3e} < {gap_min:.3e}"
            )));
        }
        Ok(())
    }
}

/// Default minimum insulation thickness, `0.02·ρ₀`.
pub fn default_gap_min(omega: &OmegaSpec) -> Result<f64> {
    match omega {
        OmegaSpec::Disk(d) => Ok(0.02 * d.radius),
        OmegaSpec::StarDomain { radius, .. } => Ok(0.02 * radius.a0),
        _ => Err(Error::precondition(
            "the boundary-fitted solver needs Ω to be a disk or a star domain",
        )),
    }
}

/// Mesh resolution and tolerances of a state solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateOptions {
    /// Radial intervals; nodes are `s_i = i/n_s`, `i = 0..=n_s`.
    pub n_s: usize,
    /// Angular nodes (even).
    pub n_theta: usize,
    /// Minimum thickness; `None` selects [`default_gap_min`].
    pub gap_min: Option<f64>,
    /// Relative residual target of the linear solve.
    pub tol: f64,
}

impl StateOptions {
    pub fn new(n_s: usize, n_theta: usize) -> Self {
        StateOptions {
            n_s,
            n_theta,
            gap_min: None,
            tol: 1e-10,
        }
    }
}

/// Discrete temperature on the boundary-fitted mesh with its diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSolution {
    pub shape: StarShape,
    pub robin_h: f64,
    pub volume_cost: f64,
    pub gap_min: f64,
    pub n_s: usize,
    pub n_theta: usize,
    /// Nodal values, row `i` (radial index) holds `n_theta` angular values.
    pub u: Vec<f64>,
    /// `u` on `∂A`.
    pub trace_outer: Vec<f64>,
    /// `−∂_ν u` on `∂Ω` per angular node (ν the outer normal of Ω).
    pub flux_inner: Vec<f64>,
    /// `sup |∂_ν u + h u|` on `∂A`.
    pub robin_residual_sup: f64,
    /// Minimized discrete energy (the functional the solver minimizes).
    pub discrete: EnergyBreakdown,
    /// `|A ∖ Ω|`, exact.
    pub insulator_area: f64,
    pub residual_history: Vec<f64>,
    geom: Geometry,
}

impl StateSolution {
    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_theta as f64
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.n_theta + j]
    }

    /// Physical position of node `(i, j)`.
    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        let t = self.theta(j);
        let s = i as f64 / self.n_s as f64;
        let r = self.geom.rho[j] + s * (self.geom.r[j] - self.geom.rho[j]);
        [self.shape.center[0] + r * t.cos(), self.shape.center[1] + r * t.sin()]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.u
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Arc-length element `|dx/dθ|` of `∂A` at the angular nodes.
    pub fn outer_speed(&self) -> &[f64] {
        &self.geom.sigma
    }

    /// Quadrature of the sharp energy: trapezoidal rule in `s` and `θ` on nodal
    /// second-order differences, trapezoidal surface term, exact volume.
    pub fn quadrature_energy(&self) -> EnergyBreakdown {
        let (ns, nt) = (self.n_s, self.n_theta);
        let ds = 1.0 / ns as f64;
        let dt = 2.0 * PI / nt as f64;
        let g = &self.geom;
        let mut dirichlet = 0.0;
        for i in 0..=ns {
            let s = i as f64 * ds;
            let weight = if i == 0 || i == ns { 0.5 } else { 1.0 };
            for j in 0..nt {
                let us = self.u_s(i, j);
                let ut = (self.node(i, (j + 1) % nt) - self.node(i, (j + nt - 1) % nt)) / (2.0 * dt);
                let (rs, r, rt) = g.map_at(s, j);
                let ass = (r * r + rt * rt) / (r * rs);
                let ast = -rt / r;
                let att = rs / r;
                dirichlet += weight * (ass * us * us + 2.0 * ast * us * ut + att * ut * ut);
            }
        }
        dirichlet *= ds * dt;
        EnergyBreakdown::new(dirichlet, self.surface_quadrature(), self.volume_cost * self.insulator_area)
    }

    fn surface_quadrature(&self) -> f64 {
        let dt = 2.0 * PI / self.n_theta as f64;
        self.robin_h
            * self
                .trace_outer
                .iter()
                .zip(&self.geom.sigma)
                .map(|(u, s)| u * u * s)
                .sum::<f64>()
            * dt
    }

    /// Second-order `∂u/∂s` at a node.
    fn u_s(&self, i: usize, j: usize) -> f64 {
        let ns = self.n_s;
        let ds = 1.0 / ns as f64;
        let v = |ii: usize| self.node(ii, j);
        if i == 0 {
            (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * ds)
        } else if i == ns {
            (3.0 * v(ns) - 4.0 * v(ns - 1) + v(ns - 2)) / (2.0 * ds)
        } else {
            (v(i + 1) - v(i - 1)) / (2.0 * ds)
        }
    }

    /// Total heat flux `∮_{∂Ω} −∂_ν u`.
    pub fn total_flux(&self) -> f64 {
        let dt = 2.0 * PI / self.n_theta as f64;
        self.flux_inner
            .iter()
            .zip(&self.geom.sigma_in)
            .map(|(f, s)| f * s)
            .sum::<f64>()
            * dt
    }
}

/// Per-angle geometry of the mapped annulus; `_h` arrays live at `θ_{j+½}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Geometry {
    rho: Vec<f64>,
    drho: Vec<f64>,
    r: Vec<f64>,
    dr: Vec<f64>,
    sigma: Vec<f64>,
    sigma_in: Vec<f64>,
    rho_h: Vec<f64>,
    drho_h: Vec<f64>,
    r_h: Vec<f64>,
    dr_h: Vec<f64>,
}

impl Geometry {
    fn new(shape: &StarShape, omega: &OmegaSpec, n_theta: usize) -> Result<Self> {
        let dt = 2.0 * PI / n_theta as f64;
        let mut g = Geometry {
            rho: Vec::with_capacity(n_theta),
            drho: Vec::with_capacity(n_theta),
            r: Vec::with_capacity(n_theta),
            dr: Vec::with_capacity(n_theta),
            sigma: Vec::with_capacity(n_theta),
            sigma_in: Vec::with_capacity(n_theta),
            rho_h: Vec::with_capacity(n_theta),
            drho_h: Vec::with_capacity(n_theta),
            r_h: Vec::with_capacity(n_theta),
            dr_h: Vec::with_capacity(n_theta),
        };
        for j in 0..n_theta {
            let t = j as f64 * dt;
            let (rho, drho) = omega.radial_function(shape.center, t)?;
            let (r, dr, _) = shape.radius.eval(t);
            g.rho.push(rho);
            g.drho.push(drho);
            g.r.push(r);
            g.dr.push(dr);
            g.sigma.push(r.hypot(dr));
            g.sigma_in.push(rho.hypot(drho));
            let th = t + 0.5 * dt;
            let (rho, drho) = omega.radial_function(shape.center, th)?;
            let (r, dr, _) = shape.radius.eval(th);
            g.rho_h.push(rho);
            g.drho_h.push(drho);
            g.r_h.push(r);
            g.dr_h.push(dr);
        }
        Ok(g)
    }

    /// `(r_s, r, r_θ)` at `(s, θ_j)`.
    #[inline]
    fn map_at(&self, s: f64, j: usize) -> (f64, f64, f64) {
        let rs = self.r[j] - self.rho[j];
        (rs, self.rho[j] + s * rs, self.drho[j] + s * (self.dr[j] - self.drho[j]))
    }

    /// `(r_s, r, r_θ)` at `(s, θ_{j+½})`.
    #[inline]
    fn map_half(&self, s: f64, j: usize) -> (f64, f64, f64) {
        let rs = self.r_h[j] - self.rho_h[j];
        (
            rs,
            self.rho_h[j] + s * rs,
            self.drho_h[j] + s * (self.dr_h[j] - self.drho_h[j]),
        )
    }
}

/// One term of the discrete quadratic form over nodal values.
#[derive(Clone, Copy, Debug)]
enum Term {
    /// `w (u_p − u_q)²`
    Edge { p: usize, q: usize, w: f64 },
    /// `c (α·u)(β·u)` over the cell corners `[00, 10, 01, 11]`.
    Cross { c: f64, nodes: [usize; 4] },
    /// `w u_p²`
    Diag { p: usize, w: f64 },
}

const ALPHA: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];
const BETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

fn terms(geom: &Geometry, h: f64, n_s: usize, n_theta: usize) -> Vec<Term> {
    let ds = 1.0 / n_s as f64;
    let dt = 2.0 * PI / n_theta as f64;
    let id = |i: usize, j: usize| i * n_theta + (j % n_theta);
    let mut out = Vec::with_capacity(3 * (n_s + 1) * n_theta + n_theta);
    for i in 0..=n_s {
        let s = i as f64 * ds;
        let sm = (i as f64 + 0.5) * ds;
        let half_row = if i == 0 || i == n_s { 0.5 } else { 1.0 };
        for j in 0..n_theta {
            if i < n_s {
                let (rs, r, rt) = geom.map_at(sm, j);
                let ass = (r * r + rt * rt) / (r * rs);
                out.push(Term::Edge {
                    p: id(i, j),
                    q: id(i + 1, j),
                    w: ass * dt / ds,
                });
                let (_, r, rt) = geom.map_half(sm, j);
                out.push(Term::Cross {
                    c: -rt / r / 2.0,
                    nodes: [id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1)],
                });
            }
            let (rs, r, _) = geom.map_half(s, j);
            out.push(Term::Edge {
                p: id(i, j),
                q: id(i, j + 1),
                w: half_row * rs / r * ds / dt,
            });
        }
    }
    for j in 0..n_theta {
        out.push(Term::Diag {
            p: id(n_s, j),
            w: h * geom.sigma[j] * dt,
        });
    }
    out
}

fn evaluate(terms: &[Term], u: &[f64]) -> (f64, f64) {
    let mut interior = 0.0;
    let mut boundary = 0.0;
    for t in terms {
        match *t {
            Term::Edge { p, q, w } => {
                let d = u[p] - u[q];
                interior += w * d * d;
            }
            Term::Cross { c, nodes } => {
                let a: f64 = (0..4).map(|k| ALPHA[k] * u[nodes[k]]).sum();
                let b: f64 = (0..4).map(|k| BETA[k] * u[nodes[k]]).sum();
                interior += c * a * b;
            }
            Term::Diag { p, w } => boundary += w * u[p] * u[p],
        }
    }
    (interior, boundary)
}

/// Folded angular ordering keeping periodic neighbours within distance 2.
#[inline]
fn fold(j: usize, n: usize) -> usize {
    if j == 0 {
        0
    } else if j <= n / 2 {
        2 * j - 1
    } else {
        2 * (n - j)
    }
}

/// Accumulates a symmetric quadratic form restricted to the free nodes
/// (`i ≥ 1`) with the `i = 0` row held at 1.
struct Assembler {
    n_theta: usize,
    matrix: BandedSpd,
    rhs: Vec<f64>,
}

impl Assembler {
    fn unknown(&self, node: usize) -> Option<usize> {
        let (i, j) = (node / self.n_theta, node % self.n_theta);
        (i > 0).then(|| (i - 1) * self.n_theta + fold(j, self.n_theta))
    }

    /// Adds `v` to `K[a][b]` and `K[b][a]` (once when `a == b`).
    fn sym(&mut self, a: usize, b: usize, v: f64) {
        match (self.unknown(a), self.unknown(b)) {
            (Some(x), Some(y)) => self.matrix.add(x, y, v),
            (Some(x), None) => self.rhs[x] -= v,
            (None, Some(y)) => self.rhs[y] -= v,
            (None, None) => {}
        }
    }

    fn add(&mut self, t: &Term) {
        match *t {
            Term::Edge { p, q, w } => {
                self.sym(p, p, w);
                self.sym(q, q, w);
                self.sym(p, q, -w);
            }
            Term::Cross { c, nodes } => {
                for a in 0..4 {
                    for b in 0..4 {
                        let v = c * ALPHA[a] * BETA[b];
                        if nodes[a] == nodes[b] {
                            self.sym(nodes[a], nodes[a], v);
                        } else {
                            self.sym(nodes[a], nodes[b], 0.5 * v);
                        }
                    }
                }
            }
            Term::Diag { p, w } => self.sym(p, p, w),
        }
    }
}

/// [`solve_state_with`] using default tolerances and gap.
pub fn solve_state(shape: &StarShape, cfg: &ProblemConfig, n_s: usize, n_theta: usize) -> Result<StateSolution> {
    solve_state_with(shape, cfg, &StateOptions::new(n_s, n_theta))
}

pub fn solve_state_with(shape: &StarShape, cfg: &ProblemConfig, opts: &StateOptions) -> Result<StateSolution> {
    cfg.validate()?;
    cfg.require_planar()?;
    let (n_s, n_theta) = (opts.n_s, opts.n_theta);
    if n_s < 8 || n_theta < 16 || n_theta % 2 != 0 {
        return Err(Error::precondition(format!(
            "mesh needs n_s ≥ 8 and even n_theta ≥ 16, got {n_s} × {n_theta}"
        )));
    }
    let gap_min = match opts.gap_min {
        Some(g) => g,
        None => default_gap_min(&cfg.omega)?,
    };
    shape.check_admissible(cfg, gap_min, n_theta)?;
    if 2 * shape.modes() >= n_theta {
        log::warn!(
            "{} Fourier modes are not resolved by {} angular nodes",
            shape.modes(),
            n_theta
        );
    }

    let geom = Geometry::new(shape, &cfg.omega, n_theta)?;
    let terms = terms(&geom, cfg.robin_h, n_s, n_theta);
    let n_unknown = n_s * n_theta;
    let mut asm = Assembler {
        n_theta,
        matrix: BandedSpd::zeros(n_unknown, n_theta + 2),
        rhs: vec![0.0; n_unknown],
    };
    for t in &terms {
        asm.add(t);
    }
    let (x, residual_history) = match solve_banded(&asm.matrix, &asm.rhs, opts.tol, 4) {
        Ok(v) => v,
        Err(Error::SolverFault { message, history }) => {
            return Err(Error::fault(
                format!(
                    "{message}; shape report: min gap {:.3e}, max |r'|/r {:.3e}",
                    shape.min_gap(&cfg.omega, 4 * n_theta).unwrap_or(f64::NAN),
                    (0..n_theta)
                        .map(|j| (geom.dr[j] / geom.r[j]).abs())
                        .fold(0.0, f64::max)
                ),
                history,
            ))
        }
        Err(e) => return Err(e),
    };

    let mut u = vec![1.0; (n_s + 1) * n_theta];
    for i in 1..=n_s {
        for j in 0..n_theta {
            u[i * n_theta + j] = x[(i - 1) * n_theta + fold(j, n_theta)];
        }
    }
    let (interior, boundary) = evaluate(&terms, &u);
    let insulator_area = shape.radius.area() - cfg.omega.area();
    let discrete = EnergyBreakdown::new(interior, boundary, cfg.volume_cost * insulator_area);

    let mut state = StateSolution {
        shape: shape.clone(),
        robin_h: cfg.robin_h,
        volume_cost: cfg.volume_cost,
        gap_min,
        n_s,
        n_theta,
        trace_outer: u[n_s * n_theta..].to_vec(),
        u,
        flux_inner: Vec::new(),
        robin_residual_sup: 0.0,
        discrete,
        insulator_area,
        residual_history,
        geom,
    };
    state.flux_inner = (0..n_theta)
        .map(|j| {
            let (rs, rho, _) = state.geom.map_at(0.0, j);
            -state.u_s(0, j) * state.geom.sigma_in[j] / (rs * rho)
        })
        .collect();
    state.robin_residual_sup = (0..n_theta)
        .map(|j| (outer_normal_derivative(&state, j) + cfg.robin_h * state.trace_outer[j]).abs())
        .fold(0.0, f64::max);
    Ok(state)
}

/// `∂_ν u` on `∂A` at angular node `j` from one-sided and central differences.
fn outer_normal_derivative(state: &StateSolution, j: usize) -> f64 {
    let (ns, nt) = (state.n_s, state.n_theta);
    let dt = 2.0 * PI / nt as f64;
    let g = &state.geom;
    let us = state.u_s(ns, j);
    let ut = (state.node(ns, (j + 1) % nt) - state.node(ns, (j + nt - 1) % nt)) / (2.0 * dt);
    let (rs, r, rt) = g.map_at(1.0, j);
    let u_r = us / rs;
    let u_phi = ut - rt / rs * us;
    (r * u_r - rt * u_phi / r) / g.sigma[j]
}

/// Energy from the flux identity `∫|∇u|² + h∮u² = ∮_{∂Ω} −∂_ν u`:
/// total = flux + `C₀|A∖Ω|`, surface by trapezoidal quadrature and the
/// Dirichlet part as the remainder.
///
/// Fails when the result disagrees with the quadrature energy by more than ten
/// times the expected discretization bound.
pub fn energy_from_flux(state: &StateSolution) -> Result<EnergyBreakdown> {
    let flux = state.total_flux();
    let surface = state.surface_quadrature();
    let volume = state.volume_cost * state.insulator_area;
    let dirichlet = flux - surface;
    let quad = state.quadrature_energy();
    let bound = FLUX_AGREEMENT_CONSTANT
        * (1.0 / (state.n_s * state.n_s) as f64 + 1.0 / (state.n_theta * state.n_theta) as f64);
    let scale = quad.total.max(f64::MIN_POSITIVE);
    let total = flux + volume;
    if (total - quad.total).abs() > 10.0 * bound * scale || dirichlet < -10.0 * bound * scale {
        return Err(Error::fault(
            format!(
                "flux energy {total:.9e} disagrees with quadrature energy {:.9e}",
                quad.total
            ),
            vec![total, quad.total],
        ));
    }
    Ok(EnergyBreakdown::new(dirichlet.max(0.0), surface, volume))
}

/// Relative agreement constant `K` in `|E_flux − E_quad|/E ≤ K (N_s⁻² + N_θ⁻²)`,
/// fitted on radial cases.
pub const FLUX_AGREEMENT_CONSTANT: f64 = 0.5;

/// Discrete energy of `shape` evaluated with the nodal values of `state` frozen
/// (same mesh indices, new geometry). Used to check the envelope identity.
pub fn frozen_energy(state: &StateSolution, shape: &StarShape, cfg: &ProblemConfig) -> Result<EnergyBreakdown> {
    shape.check_admissible(cfg, state.gap_min, state.n_theta)?;
    let geom = Geometry::new(shape, &cfg.omega, state.n_theta)?;
    let terms = terms(&geom, cfg.robin_h, state.n_s, state.n_theta);
    let (interior, boundary) = evaluate(&terms, &state.u);
    let area = shape.radius.area() - cfg.omega.area();
    Ok(EnergyBreakdown::new(interior, boundary, cfg.volume_cost * area))
}
