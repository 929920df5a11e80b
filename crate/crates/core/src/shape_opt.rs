//! Shape gradients and projected gradient descent over Fourier coefficients.
//!
//! For the state `u` of a shape `A`, a normal boundary velocity `V` changes the
//! energy by `dF[V] = ∮_{∂A} g V dσ` with
//!
//! ```text
//! g = |∇_τ u|² − h² u² + h κ u² + C₀
//! ```
//!
//! (`κ` the curvature of `∂A`, positive for convex parts). Perturbing the
//! coefficient of a basis function `φ` moves the boundary radially by `φ`, so
//! `∂F/∂coef = ∫ g(θ) r(θ) φ(θ) dθ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EnergyBreakdown, FourierCurve, ProblemConfig};
use crate::robin::{default_gap_min, frozen_energy, solve_state_with, StarShape, StateOptions, StateSolution};

/// θ-derivative of periodic samples by exact differentiation of their
/// trigonometric interpolant (Nyquist mode dropped).
pub fn spectral_derivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let half = n / 2;
    let mut coef = Vec::with_capacity(half);
    for k in 1..half.max(1) {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            let (s, c) = (2.0 * PI * (k * j % n) as f64 / n as f64).sin_cos();
            a += v * c;
            b += v * s;
        }
        coef.push((2.0 * a / n as f64, 2.0 * b / n as f64));
    }
    (0..n)
        .map(|j| {
            coef.iter()
                .enumerate()
                .map(|(idx, (a, b))| {
                    let k = idx + 1;
                    let (s, c) = (2.0 * PI * (k * j % n) as f64 / n as f64).sin_cos();
                    k as f64 * (b * c - a * s)
                })
                .sum()
        })
        .collect()
}

/// Pointwise first-variation density `g` at the angular nodes of `∂A`.
pub fn stationarity_density(state: &StateSolution, cfg: &ProblemConfig) -> Vec<f64> {
    let h = cfg.robin_h;
    let dtrace = spectral_derivative(&state.trace_outer);
    let sigma = state.outer_speed();
    (0..state.n_theta)
        .map(|j| {
            let u = state.trace_outer[j];
            let tang = dtrace[j] / sigma[j];
            let kappa = state.shape.radius.curvature(state.theta(j));
            tang * tang - h * h * u * u + h * kappa * u * u + cfg.volume_cost
        })
        .collect()
}

/// `dF[V] = ∮ g V dσ` for normal velocity samples `v` at the angular nodes.
pub fn first_variation(state: &StateSolution, shape: &StarShape, cfg: &ProblemConfig, v: &[f64]) -> Result<f64> {
    if state.shape != *shape {
        return Err(Error::precondition("state was solved on a different shape"));
    }
    if v.len() != state.n_theta {
        return Err(Error::precondition(format!(
            "expected {} velocity samples, got {}",
            state.n_theta,
            v.len()
        )));
    }
    warn_unresolved(shape, state.n_theta);
    let g = stationarity_density(state, cfg);
    let dt = 2.0 * PI / state.n_theta as f64;
    Ok(g.iter()
        .zip(v)
        .zip(state.outer_speed())
        .map(|((g, v), s)| g * v * s)
        .sum::<f64>()
        * dt)
}

fn warn_unresolved(shape: &StarShape, n_theta: usize) {
    if 4 * shape.modes() > n_theta {
        log::warn!(
            "curvature of {} modes is under-resolved on {} angular nodes",
            shape.modes(),
            n_theta
        );
    }
}

/// Analytic gradient with respect to the flattened coefficients `[a0, a1, b1, …]`.
pub fn coefficient_gradient(state: &StateSolution, cfg: &ProblemConfig) -> Vec<f64> {
    let g = stationarity_density(state, cfg);
    let dt = 2.0 * PI / state.n_theta as f64;
    let shape = &state.shape;
    (0..1 + 2 * shape.modes())
        .map(|idx| {
            (0..state.n_theta)
                .map(|j| {
                    let t = state.theta(j);
                    g[j] * shape.radius.radius(t) * FourierCurve::basis(idx, t)
                })
                .sum::<f64>()
                * dt
        })
        .collect()
}

/// Central-difference coefficient gradient and the step it used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdGradient {
    pub gradient: Vec<f64>,
    pub step: f64,
}

fn with_coefficient(shape: &StarShape, idx: usize, delta: f64) -> StarShape {
    let mut c = shape.radius.to_vec();
    c[idx] += delta;
    StarShape {
        center: shape.center,
        radius: FourierCurve::from_slice(&c),
    }
}

/// Finite-difference gradient of the discrete energy, re-solving the state for
/// every probe.
pub fn shape_gradient_fd(shape: &StarShape, cfg: &ProblemConfig, n_s: usize, n_theta: usize) -> Result<Vec<f64>> {
    Ok(shape_gradient_fd_with(shape, cfg, &StateOptions::new(n_s, n_theta), false)?.gradient)
}

/// As [`shape_gradient_fd`]; with `frozen` the probes keep the nodal values
/// of the base state instead of re-solving.
///
/// The step comes from one curvature probe in `a0`: with length scale
/// `L = sqrt(|F|/|F''|)` it is `L·(3η)^{1/3}` for a relative noise level `η`.
/// Probes that leave the admissible set halve the step (up to ten times).
pub fn shape_gradient_fd_with(
    shape: &StarShape,
    cfg: &ProblemConfig,
    opts: &StateOptions,
    frozen: bool,
) -> Result<FdGradient> {
    let gap_min = match opts.gap_min {
        Some(g) => g,
        None => default_gap_min(&cfg.omega)?,
    };
    let opts = StateOptions {
        gap_min: Some(gap_min),
        ..*opts
    };
    let base = solve_state_with(shape, cfg, &opts)?;
    let energy = |s: &StarShape| -> Result<f64> {
        if frozen {
            Ok(frozen_energy(&base, s, cfg)?.total)
        } else {
            Ok(solve_state_with(s, cfg, &opts)?.discrete.total)
        }
    };
    let f0 = base.discrete.total;
    let margin = shape.min_gap(&cfg.omega, 4 * opts.n_theta)? - gap_min;

    let scale = shape.radius.a0;
    let mut probe = (1e-2 * scale).min(0.25 * margin);
    let mut step = None;
    for _ in 0..10 {
        let fp = energy(&with_coefficient(shape, 0, probe));
        let fm = energy(&with_coefficient(shape, 0, -probe));
        match (fp, fm) {
            (Ok(fp), Ok(fm)) => {
                let curv = ((fp - 2.0 * f0 + fm) / (probe * probe)).abs();
                let length = (f0.abs() / curv.max(f64::MIN_POSITIVE))
                    .sqrt()
                    .clamp(1e-3 * scale, 10.0 * scale);
                step = Some(length * (3.0 * FD_NOISE).cbrt());
                break;
            }
            (Err(Error::Precondition(_)), _) | (_, Err(Error::Precondition(_))) => probe *= 0.5,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    let Some(mut step) = step else {
        return Err(Error::precondition("curvature probe could not stay admissible"));
    };
    step = step.min(0.5 * margin);

    let n = 1 + 2 * shape.modes();
    for _ in 0..10 {
        let mut gradient = Vec::with_capacity(n);
        let mut ok = true;
        for idx in 0..n {
            let fp = energy(&with_coefficient(shape, idx, step));
            let fm = energy(&with_coefficient(shape, idx, -step));
            match (fp, fm) {
                (Ok(fp), Ok(fm)) => gradient.push((fp - fm) / (2.0 * step)),
                (Err(Error::Precondition(_)), _) | (_, Err(Error::Precondition(_))) => {
                    ok = false;
                    break;
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        if ok {
            return Ok(FdGradient { gradient, step });
        }
        step *= 0.5;
    }
    Err(Error::precondition("finite-difference probes violate the gap constraint"))
}

/// Relative round-off level assumed for discrete energies.
const FD_NOISE: f64 = 1e-14;

/// How the descent obtains coefficient gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientSource {
    /// First-variation density of the current state.
    Analytic,
    /// Central differences of the discrete energy.
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptOptions {
    pub n_s: usize,
    pub n_theta: usize,
    pub max_iter: usize,
    /// Stop when the projected, preconditioned gradient norm falls below this.
    pub tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    pub gap_min: Option<f64>,
    pub gradient: GradientSource,
}

impl Default for OptOptions {
    fn default() -> Self {
        OptOptions {
            n_s: 32,
            n_theta: 64,
            max_iter: 300,
            tol: 1e-3,
            armijo: 1e-4,
            max_backtracks: 40,
            gap_min: None,
            gradient: GradientSource::Analytic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: EnergyBreakdown,
    pub grad_norm: f64,
}

/// Which competitor has the lower energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Minimizer {
    Attached,
    /// `A = Ω`, energy `h|∂Ω|`.
    Detached,
    /// Energies within `1e-9` of each other; both are reported.
    Tie,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    /// Best attached shape found.
    pub shape: StarShape,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    /// `sup |g|` on the final attached shape.
    pub stationarity_residual: f64,
    pub attached_energy: EnergyBreakdown,
    pub detached_energy: f64,
    pub minimizer: Minimizer,
    /// Energy of the reported minimizer.
    pub final_energy: f64,
    pub message: Option<String>,
}

impl OptResult {
    /// Boundary radius of the reported minimizer at angle θ (the Ω boundary when detached).
    pub fn reported_radius(&self, cfg: &ProblemConfig, theta: f64) -> Result<f64> {
        match self.minimizer {
            Minimizer::Detached => Ok(cfg.omega.radial_function(self.shape.center, theta)?.0),
            _ => Ok(self.shape.radius.radius(theta)),
        }
    }
}

fn project(coeffs: &mut [f64], center: [f64; 2], cfg: &ProblemConfig, gap_min: f64, samples: usize) -> Result<()> {
    let shape = StarShape {
        center,
        radius: FourierCurve::from_slice(coeffs),
    };
    let gap = shape.min_gap(&cfg.omega, samples)?;
    let deficit = gap_min - gap;
    if deficit > 0.0 {
        coeffs[0] += deficit * (1.0 + 1e-12) + 1e-15 * coeffs[0].abs();
    }
    Ok(())
}

/// Projected gradient descent with Armijo backtracking, preconditioned by
/// `1/(1+k²)` per mode. The detached competitor `A = Ω` is always evaluated.
pub fn optimize_shape(cfg: &ProblemConfig, init: &StarShape, opts: &OptOptions) -> Result<OptResult> {
    cfg.validate()?;
    let gap_min = match opts.gap_min {
        Some(g) => g,
        None => default_gap_min(&cfg.omega)?,
    };
    let sopts = StateOptions {
        gap_min: Some(gap_min),
        ..StateOptions::new(opts.n_s, opts.n_theta)
    };
    let samples = (4 * opts.n_theta).max(64 * (init.modes() + 1));
    let center = init.center;
    let precond: Vec<f64> = (0..1 + 2 * init.modes())
        .map(|i| {
            let k = FourierCurve::mode_of_index(i) as f64;
            1.0 / (1.0 + k * k)
        })
        .collect();

    let gradient_of = |state: &StateSolution| -> Result<Vec<f64>> {
        match opts.gradient {
            GradientSource::Analytic => Ok(coefficient_gradient(state, cfg)),
            GradientSource::FiniteDifference => {
                // probes may dip below the descent's own gap so that shapes on
                // the constraint still get two-sided differences
                let probe_opts = StateOptions {
                    gap_min: Some(0.5 * gap_min),
                    ..sopts
                };
                Ok(shape_gradient_fd_with(&state.shape, cfg, &probe_opts, false)?.gradient)
            }
        }
    };
    let projected_norm = |p: &[f64], d: &[f64]| -> Result<f64> {
        let mut q: Vec<f64> = p.iter().zip(d).map(|(a, b)| a - b).collect();
        project(&mut q, center, cfg, gap_min, samples)?;
        Ok(p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    };

    let mut p = init.radius.to_vec();
    project(&mut p, center, cfg, gap_min, samples)?;
    let shape_of = |p: &[f64]| StarShape {
        center,
        radius: FourierCurve::from_slice(p),
    };
    let mut state = solve_state_with(&shape_of(&p), cfg, &sopts)?;
    let mut grad = gradient_of(&state)?;
    let mut dir: Vec<f64> = grad.iter().zip(&precond).map(|(g, w)| g * w).collect();
    let mut gnorm = projected_norm(&p, &dir)?;
    let mut trace = vec![TraceRow {
        iter: 0,
        energy: state.discrete,
        grad_norm: gnorm,
    }];
    let mut alpha = {
        let dmax = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if dmax > 0.0 {
            0.1 * p[0] / dmax
        } else {
            1.0
        }
    };
    let mut converged = gnorm <= opts.tol;
    let mut message = None;

    let mut iter = 0;
    while !converged && iter < opts.max_iter {
        iter += 1;
        let e0 = state.discrete.total;
        let mut accepted = None;
        let mut a = alpha;
        for _ in 0..opts.max_backtracks {
            let mut q: Vec<f64> = p.iter().zip(&dir).map(|(x, d)| x - a * d).collect();
            project(&mut q, center, cfg, gap_min, samples)?;
            let decrease: f64 = grad.iter().zip(p.iter().zip(&q)).map(|(g, (x, y))| g * (x - y)).sum();
            if decrease <= 0.0 {
                a *= 0.5;
                continue;
            }
            match solve_state_with(&shape_of(&q), cfg, &sopts) {
                Ok(trial) if trial.discrete.total <= e0 - opts.armijo * decrease => {
                    accepted = Some((q, trial));
                    break;
                }
                Ok(_) | Err(Error::Precondition(_)) => a *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((q, trial)) = accepted else {
            message = Some(format!(
                "line search failed at iteration {iter} (projected gradient norm {gnorm:.3e})"
            ));
            break;
        };
        p = q;
        state = trial;
        alpha = (2.0 * a).min(1e3 * alpha);
        grad = gradient_of(&state)?;
        dir = grad.iter().zip(&precond).map(|(g, w)| g * w).collect();
        gnorm = projected_norm(&p, &dir)?;
        trace.push(TraceRow {
            iter,
            energy: state.discrete,
            grad_norm: gnorm,
        });
        converged = gnorm <= opts.tol;
    }
    if !converged && message.is_none() {
        message = Some(format!("stopped after {} iterations", opts.max_iter));
    }

    let g = stationarity_density(&state, cfg);
    let detached = cfg.detached_energy();
    let attached = state.discrete;
    let minimizer = if (attached.total - detached).abs() <= 1e-9 {
        Minimizer::Tie
    } else if detached < attached.total {
        Minimizer::Detached
    } else {
        Minimizer::Attached
    };
    Ok(OptResult {
        shape: state.shape.clone(),
        trace,
        converged,
        stationarity_residual: g.iter().fold(0.0, |m, v| m.max(v.abs())),
        attached_energy: attached,
        detached_energy: detached,
        minimizer,
        final_energy: attached.total.min(detached),
        message,
    })
}
