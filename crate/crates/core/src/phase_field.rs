//! Elliptic relaxation of the SBV insulation energy on a Cartesian grid.
//!
//! ```text
//! F_ε(u, z) = Σ_f ((z_a²+z_b²)/2 + k_ε)(Δu)² w_f
//!           + Σ_f ε s_f (Δz)² w_f + Σ_i A s_i (1 − z_i)²/(4ε)
//!           + C₀ Σ_{i∉Ω} A σ_δ(u_i),        s_i = h q(u_i) + η
//! ```
//!
//! `z ≈ 0` marks the jump set. With `q = 2u²` the two halves of a transition
//! layer each carry the trace of their own side, so a jump between values `a`
//! and `b` costs `h(a² + b²)`: interfaces between two positive phases are
//! charged twice, as in the sharp functional.
//!
//! Minimization alternates two linear solves. The z-step is exact. The u-step
//! minimizes a majorizer: `σ_δ(u) = clamp(u/δ, 0, 1)` is concave on `u ≥ 0`,
//! so its tangent at the previous iterate bounds it from above, and the
//! resulting quadratic problem with `u ≥ 0` is solved by a primal–dual active
//! set loop. Both steps therefore decrease `F_ε`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pcg, CsrMatrix};
use crate::model::energy::{omega_cells, phase_field_energy_unchecked, surface_weights};
use crate::model::{energy_sbv, energy_with_jump_set, CellMask, EnergyBreakdown, FaceSet, Grid, GridField, OmegaSpec, ProblemConfig, SBVParams};
use crate::radial::{optimize_radius, radial_profile};

/// Surface weight `q(u)` of the phase-field functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightForm {
    /// `q = 2u²`.
    TwoU2,
    /// `q = u² + u_p²` with `u_p` the neighbour across the largest difference
    /// (lagged one alternation).
    TraceSumProxy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PFParams {
    /// Strictly decreasing interface widths, each at least `2dx`.
    pub epsilon_schedule: Vec<f64>,
    /// Elliptic floor `k_ε` on the Dirichlet coefficient.
    pub k_eps: f64,
    pub weight_form: WeightForm,
    /// `δ` of the volume step and the positivity cut of set extraction.
    pub delta_cut: f64,
    /// Cells with `z` below this belong to the extracted jump set.
    pub z_cut: f64,
    /// `η`, keeps the z-problem coercive where `u = 0`.
    pub surface_floor: f64,
    pub max_alternations: usize,
    /// Relative energy change that ends an ε stage.
    pub tol: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Amplitude of the seeded uniform noise added to the initial field.
    pub noise: f64,
}

impl PFParams {
    /// Defaults for cell size `dx`: four widths geometrically from `8dx` to `2dx`.
    pub fn for_spacing(dx: f64) -> Self {
        PFParams {
            epsilon_schedule: (0..4).map(|k| 8.0 * dx * 0.25f64.powf(k as f64 / 3.0)).collect(),
            k_eps: 1e-6,
            weight_form: WeightForm::TwoU2,
            delta_cut: 0.05,
            z_cut: 0.5,
            surface_floor: 1e-3,
            max_alternations: 200,
            tol: 1e-6,
            cg_tol: 1e-10,
            cg_max_iter: 5000,
            noise: 0.0,
        }
    }

    pub fn validate(&self, dx: f64) -> Result<()> {
        if self.epsilon_schedule.is_empty() {
            return Err(Error::precondition("ε schedule is empty"));
        }
        for w in self.epsilon_schedule.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::precondition("ε schedule must be strictly decreasing"));
            }
        }
        let last = *self.epsilon_schedule.last().unwrap();
        if last < 2.0 * dx * (1.0 - 1e-9) {
            return Err(Error::precondition(format!(
                "ε = {last:.4e} is below the resolvable width 2dx = {:.4e}",
                2.0 * dx
            )));
        }
        if !(self.k_eps > 0.0) {
            return Err(Error::precondition("k_eps must be positive"));
        }
        if !(self.surface_floor > 0.0) {
            return Err(Error::precondition("surface_floor must be positive"));
        }
        for (name, v) in [("delta_cut", self.delta_cut), ("z_cut", self.z_cut)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::precondition(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.tol > 0.0 && self.cg_tol > 0.0) || self.max_alternations == 0 {
            return Err(Error::precondition("tolerances and iteration limits must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise <= 1.0) {
            return Err(Error::precondition("noise amplitude must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// History of one ε stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub epsilon: f64,
    /// `F_ε` after the initial z-step and after every alternation.
    pub energies: Vec<EnergyBreakdown>,
    pub final_energy: EnergyBreakdown,
    pub relaxation_halvings: usize,
    pub converged: bool,
    /// Sharp grid energy of the configuration extracted at the end of the stage.
    pub extracted: EnergyBreakdown,
}

/// Classical configuration recovered from relaxed fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    /// `{u > δ} ∪ Ω`.
    pub a_mask: CellMask,
    /// `{z < z_cut}`.
    pub k_mask: CellMask,
    /// Component label of every cell of `A ∖ K` (4-connectivity), 0 elsewhere.
    pub labels: Vec<u32>,
    pub positive_components: usize,
    /// Label of every cell of the zero phase, 0 elsewhere.
    pub zero_labels: Vec<u32>,
    pub zero_components: usize,
    /// Region of every cell after assigning `A ∩ K` to the nearest component.
    pub regions: Vec<u32>,
    /// Minimizer of the discrete Robin problem on the regions.
    pub classical: GridField,
    /// Faces between different regions with a positive side.
    pub jump_set: FaceSet,
    /// Energy of the pair `(classical, jump_set)`.
    pub energy: EnergyBreakdown,
    /// [`energy_sbv`] of `classical` (jumps detected by threshold).
    pub threshold_energy: EnergyBreakdown,
    /// Pairs of distinct positive regions that share at least one face.
    pub touching_pairs: Vec<(u32, u32)>,
    /// Total length of faces with positive values on both sides and a jump.
    pub multiplicity_two_length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseFieldResult {
    pub u: GridField,
    pub z: GridField,
    pub stages: Vec<StageTrace>,
    pub extraction: Extraction,
    /// `energy_sbv` of the raw field `u` (no extraction).
    pub raw_energy: EnergyBreakdown,
}

/// Face list with weights `length/distance`.
struct Faces {
    a: Vec<usize>,
    b: Vec<usize>,
    w: Vec<f64>,
    len: Vec<f64>,
}

impl Faces {
    fn new(grid: &Grid) -> Self {
        let mut f = Faces {
            a: Vec::new(),
            b: Vec::new(),
            w: Vec::new(),
            len: Vec::new(),
        };
        for face in grid.faces() {
            f.a.push(face.a);
            f.b.push(face.b);
            f.w.push(face.length / face.distance);
            f.len.push(face.length);
        }
        f
    }
}

/// Initial temperature: the radial optimum of the largest disk of Ω,
/// rasterized, with Ω set to 1 and optional seeded noise outside Ω.
pub fn initial_field(cfg: &ProblemConfig, grid: &Grid, p: &PFParams, seed: u64) -> Result<GridField> {
    let omega = omega_cells(grid, cfg)?;
    let profile = match cfg.omega.primary_disk() {
        Some(d) if cfg.robin_h > 0.0 => {
            let opt = optimize_radius(2, cfg.robin_h, cfg.volume_cost, d.radius)?;
            (opt.r_star > d.radius)
                .then(|| radial_profile(2, cfg.robin_h, d.radius, opt.r_star).map(|s| (d, s)))
                .transpose()?
        }
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|k| {
            if omega[k] {
                return 1.0;
            }
            let mut v = 0.0;
            if let Some((d, s)) = &profile {
                let c = grid.center_of(k);
                let r = (c[0] - d.center[0]).hypot(c[1] - d.center[1]);
                if r < s.r_outer {
                    v = s.value(r.max(d.radius)).clamp(0.0, 1.0);
                }
            }
            if p.noise > 0.0 {
                v = (v + p.noise * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0);
            }
            v
        })
        .collect();
    GridField::from_values(*grid, values)
}

/// Runs the ε continuation from the default initial field.
pub fn at_minimize(cfg: &ProblemConfig, grid: &Grid, p: &PFParams, seed: u64) -> Result<PhaseFieldResult> {
    let u0 = initial_field(cfg, grid, p, seed)?;
    at_minimize_from(cfg, u0, p)
}

/// Runs the ε continuation from a given initial temperature.
pub fn at_minimize_from(cfg: &ProblemConfig, u0: GridField, p: &PFParams) -> Result<PhaseFieldResult> {
    cfg.validate()?;
    cfg.require_planar()?;
    u0.validate()?;
    let grid = u0.grid();
    if (grid.spacing[0] - grid.spacing[1]).abs() > 1e-12 * grid.spacing[0] {
        return Err(Error::precondition("phase-field grids must have square cells"));
    }
    p.validate(grid.spacing[0])?;
    let omega = omega_cells(&grid, cfg)?;
    let faces = Faces::new(&grid);

    let mut u = u0;
    for (v, &inside) in u.values.iter_mut().zip(&omega) {
        *v = if inside { 1.0 } else { v.clamp(0.0, 1.0) };
    }
    let mut z = GridField::filled(grid, 1.0);
    let mut stages = Vec::new();
    let sbv = SBVParams {
        positivity_cut: p.delta_cut,
        ..SBVParams::default()
    };

    for &eps in &p.epsilon_schedule {
        z = z_step(&u, &z, eps, cfg, p, &faces)?;
        let mut e = phase_field_energy_unchecked(&u, &z, eps, cfg, p, &omega);
        let mut energies = vec![e];
        let mut history = vec![e.total];
        let mut halvings = 0;
        let mut converged = false;
        for _ in 0..p.max_alternations {
            let target = u_step(&u, &z, eps, cfg, p, &faces, &omega)?;
            let mut theta = 1.0;
            let (u_new, e_u) = loop {
                let trial = if theta == 1.0 {
                    target.clone()
                } else {
                    blend(&u, &target, theta)
                };
                let e_trial = phase_field_energy_unchecked(&trial, &z, eps, cfg, p, &omega);
                if e_trial.total <= e.total + 1e-10 * e.total.abs() {
                    break (trial, e_trial);
                }
                theta *= 0.5;
                halvings += 1;
                if theta < 1.0 / 1024.0 {
                    history.push(e_trial.total);
                    return Err(Error::fault(
                        format!("phase-field energy increased at ε = {eps:.4e} despite relaxation"),
                        history,
                    ));
                }
            };
            u = u_new;
            z = z_step(&u, &z, eps, cfg, p, &faces)?;
            let e_new = phase_field_energy_unchecked(&u, &z, eps, cfg, p, &omega);
            // the exact z-step cannot increase the energy beyond solver noise
            let e_new = if e_new.total <= e_u.total + 1e-10 * e_u.total.abs() {
                e_new
            } else {
                history.push(e_new.total);
                return Err(Error::fault("z-step increased the phase-field energy", history));
            };
            let change = (e.total - e_new.total).abs();
            e = e_new;
            energies.push(e);
            history.push(e.total);
            if change <= p.tol * e.total.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        let extracted = extract_sets(&u, &z, cfg, p, &sbv)?.energy;
        log::info!(
            "ε = {eps:.4e}: F_ε = {:.8e} after {} alternations, extracted {:.8e}",
            e.total,
            energies.len() - 1,
            extracted.total
        );
        stages.push(StageTrace {
            epsilon: eps,
            energies,
            final_energy: e,
            relaxation_halvings: halvings,
            converged,
            extracted,
        });
    }
    let extraction = extract_sets(&u, &z, cfg, p, &sbv)?;
    let raw_energy = energy_sbv(&u, cfg, &sbv)?;
    Ok(PhaseFieldResult {
        u,
        z,
        stages,
        extraction,
        raw_energy,
    })
}

fn blend(u: &GridField, target: &GridField, theta: f64) -> GridField {
    let mut out = u.clone();
    for (o, t) in out.values.iter_mut().zip(&target.values) {
        *o += theta * (t - *o);
    }
    out
}

/// Exact minimization in `z` for fixed `u`.
fn z_step(u: &GridField, z_prev: &GridField, eps: f64, cfg: &ProblemConfig, p: &PFParams, faces: &Faces) -> Result<GridField> {
    let grid = u.grid();
    let n = grid.len();
    let area = grid.cell_area();
    let s = surface_weights(u, cfg, p);
    let mut diag: Vec<f64> = s.iter().map(|si| area * si / (4.0 * eps)).collect();
    let rhs = diag.clone();
    let mut trip = Vec::with_capacity(n + 2 * faces.a.len());
    for f in 0..faces.a.len() {
        let (a, b, w) = (faces.a[f], faces.b[f], faces.w[f]);
        let du = u.values[a] - u.values[b];
        let g = 0.5 * du * du * w;
        diag[a] += g;
        diag[b] += g;
        let c = eps * 0.5 * (s[a] + s[b]) * w;
        diag[a] += c;
        diag[b] += c;
        trip.push((a, b, -c));
        trip.push((b, a, -c));
    }
    trip.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
    let m = CsrMatrix::from_triplets(n, trip);
    let mut z = z_prev.values.clone();
    let rep = pcg(&m, &rhs, &mut z, p.cg_tol, p.cg_max_iter)?;
    log::debug!("z-step: {} CG iterations", rep.iterations);
    for v in &mut z {
        *v = v.clamp(0.0, 1.0);
    }
    GridField::from_values(grid, z)
}

/// Minimizes the majorizer of `F_ε(·, z)` at `u` subject to `u ≥ 0`, `u = 1` on Ω.
fn u_step(
    u: &GridField,
    z: &GridField,
    eps: f64,
    cfg: &ProblemConfig,
    p: &PFParams,
    faces: &Faces,
    omega: &[bool],
) -> Result<GridField> {
    let grid = u.grid();
    let n = grid.len();
    let area = grid.cell_area();
    let h = cfg.robin_h;
    let factor = match p.weight_form {
        WeightForm::TwoU2 => 2.0,
        WeightForm::TraceSumProxy => 1.0,
    };
    // quadratic coefficient of u_i² and the linear coefficient b_i
    let mut c: Vec<f64> = z
        .values
        .iter()
        .map(|zi| factor * h * area * (1.0 - zi) * (1.0 - zi) / (4.0 * eps))
        .collect();
    let coef: Vec<f64> = (0..faces.a.len())
        .map(|f| {
            let (a, b) = (faces.a[f], faces.b[f]);
            let (za, zb) = (z.values[a], z.values[b]);
            let dz = za - zb;
            let surf = 0.5 * factor * eps * h * dz * dz * faces.w[f];
            c[a] += surf;
            c[b] += surf;
            (0.5 * (za * za + zb * zb) + p.k_eps) * faces.w[f]
        })
        .collect();
    let lin: Vec<f64> = (0..n)
        .map(|i| {
            if !omega[i] && u.values[i] < p.delta_cut {
                cfg.volume_cost * area / p.delta_cut
            } else {
                0.0
            }
        })
        .collect();

    let mut active: Vec<bool> = (0..n).map(|i| !omega[i] && u.values[i] <= 0.0).collect();
    let mut x = u.values.clone();
    for _ in 0..50 {
        // free unknowns
        let mut index = vec![usize::MAX; n];
        let mut free = Vec::new();
        for i in 0..n {
            if !omega[i] && !active[i] {
                index[i] = free.len();
                free.push(i);
            }
        }
        let m = free.len();
        let mut diag: Vec<f64> = free.iter().map(|&i| c[i]).collect();
        let mut rhs: Vec<f64> = free.iter().map(|&i| -0.5 * lin[i]).collect();
        let mut trip = Vec::with_capacity(m + 4 * m);
        for f in 0..faces.a.len() {
            let (a, b, k) = (faces.a[f], faces.b[f], coef[f]);
            let (ia, ib) = (index[a], index[b]);
            if ia != usize::MAX {
                diag[ia] += k;
                if ib != usize::MAX {
                    trip.push((ia, ib, -k));
                    trip.push((ib, ia, -k));
                } else if omega[b] {
                    rhs[ia] += k;
                }
            }
            if ib != usize::MAX {
                diag[ib] += k;
                if ia == usize::MAX && omega[a] {
                    rhs[ib] += k;
                }
            }
        }
        trip.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
        let mat = CsrMatrix::from_triplets(m, trip);
        let mut y: Vec<f64> = free.iter().map(|&i| x[i].max(0.0)).collect();
        let rep = pcg(&mat, &rhs, &mut y, p.cg_tol, p.cg_max_iter)?;
        log::debug!("u-step: {} free cells, {} CG iterations", m, rep.iterations);
        for i in 0..n {
            x[i] = if omega[i] {
                1.0
            } else if active[i] {
                0.0
            } else {
                y[index[i]]
            };
        }
        // primal–dual update of the active set
        let mut grad = vec![0.0; n];
        for f in 0..faces.a.len() {
            let (a, b, k) = (faces.a[f], faces.b[f], coef[f]);
            let d = k * (x[a] - x[b]);
            grad[a] += 2.0 * d;
            grad[b] -= 2.0 * d;
        }
        let mut changed = false;
        for i in 0..n {
            if omega[i] {
                continue;
            }
            let g = grad[i] + 2.0 * c[i] * x[i] + lin[i];
            if active[i] && g < -1e-14 * lin[i].max(1e-300) {
                active[i] = false;
                changed = true;
            } else if !active[i] && x[i] < 0.0 {
                active[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    GridField::from_values(grid, x)
}

/// 4-connected components of `mask`; labels start at 1.
pub fn label_components(grid: &Grid, mask: &[bool]) -> (Vec<u32>, usize) {
    let mut labels = vec![0u32; grid.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..grid.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count as u32;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            for nb in grid.neighbors(k) {
                if mask[nb] && labels[nb] == 0 {
                    labels[nb] = count as u32;
                    queue.push_back(nb);
                }
            }
        }
    }
    (labels, count)
}

/// Recovers `A`, `K`, component labels and the classical pair from `(u, z)`.
///
/// Cells of `A ∩ K` join the nearest component of `A ∖ K` (breadth-first
/// through `A`). On the resulting regions the discrete Robin problem is solved
/// again — faces inside a region carry the Dirichlet term, faces leaving a
/// region carry `h u²` for the positive side — and the minimizer is evaluated
/// together with its jump set (the region boundaries). Regions without Ω cells carry no heat and are dropped.
pub fn extract_sets(u: &GridField, z: &GridField, cfg: &ProblemConfig, p: &PFParams, sbv: &SBVParams) -> Result<Extraction> {
    if !u.same_grid(z) {
        return Err(Error::precondition("u and z live on different grids"));
    }
    let grid = u.grid();
    let n = grid.len();
    let omega = omega_cells(&grid, cfg)?;
    let in_a: Vec<bool> = (0..n).map(|i| omega[i] || u.values[i] > p.delta_cut).collect();
    if !in_a.iter().any(|&b| b) {
        return Err(Error::fault("extracted insulator is empty", vec![]));
    }
    let in_k: Vec<bool> = z.values.iter().map(|&v| v < p.z_cut).collect();
    let core: Vec<bool> = (0..n).map(|i| in_a[i] && (!in_k[i] || omega[i])).collect();
    let (labels, positive_components) = label_components(&grid, &core);

    let mut regions = labels.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| regions[i] != 0).collect();
    while let Some(k) = queue.pop_front() {
        for nb in grid.neighbors(k) {
            if in_a[nb] && regions[nb] == 0 {
                regions[nb] = regions[k];
                queue.push_back(nb);
            }
        }
    }
    // keep only regions that hold part of Ω
    let mut heated = vec![false; positive_components + 1];
    for i in 0..n {
        if omega[i] {
            heated[regions[i] as usize] = true;
        }
    }
    for r in &mut regions {
        if !heated[*r as usize] {
            *r = 0;
        }
    }
    let zero: Vec<bool> = regions.iter().map(|&r| r == 0).collect();
    let (zero_labels, zero_components) = label_components(&grid, &zero);

    let classical = solve_regions(&grid, &regions, &omega, cfg, p)?;
    let mut jump_set = FaceSet::empty(grid);
    let mut touching_pairs = Vec::new();
    let mut multiplicity_two_length = 0.0;
    for f in grid.faces() {
        let (ra, rb) = (regions[f.a], regions[f.b]);
        if ra == rb {
            continue;
        }
        jump_set.insert(&f);
        let (va, vb) = (classical.values[f.a], classical.values[f.b]);
        if ra != 0 && rb != 0 {
            let pair = (ra.min(rb), ra.max(rb));
            if !touching_pairs.contains(&pair) {
                touching_pairs.push(pair);
            }
            if va > sbv.positivity_cut && vb > sbv.positivity_cut {
                multiplicity_two_length += f.length;
            }
        }
    }
    let energy = energy_with_jump_set(&classical, &jump_set, cfg, sbv.positivity_cut)?;
    let threshold_energy = energy_sbv(&classical, cfg, sbv)?;
    touching_pairs.sort_unstable();

    Ok(Extraction {
        a_mask: CellMask::from_fn(grid, |i| in_a[i]),
        k_mask: CellMask::from_fn(grid, |i| in_k[i]),
        labels,
        positive_components,
        zero_labels,
        zero_components,
        regions,
        classical,
        jump_set,
        energy,
        threshold_energy,
        touching_pairs,
        multiplicity_two_length,
    })
}

/// Discrete Robin problem on labelled regions: minimizes
/// `Σ_{same region} (Δu)² w + Σ_{region boundary} h u² · length`, `u = 1` on Ω.
pub fn solve_regions(grid: &Grid, regions: &[u32], omega: &[bool], cfg: &ProblemConfig, p: &PFParams) -> Result<GridField> {
    let n = grid.len();
    let mut index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for i in 0..n {
        if regions[i] != 0 && !omega[i] {
            index[i] = free.len();
            free.push(i);
        }
    }
    let m = free.len();
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut trip = Vec::new();
    for f in grid.faces() {
        let (ra, rb) = (regions[f.a], regions[f.b]);
        let (ia, ib) = (index[f.a], index[f.b]);
        if ra != 0 && ra == rb {
            let w = f.length / f.distance;
            match (ia != usize::MAX, ib != usize::MAX) {
                (true, true) => {
                    diag[ia] += w;
                    diag[ib] += w;
                    trip.push((ia, ib, -w));
                    trip.push((ib, ia, -w));
                }
                (true, false) => {
                    diag[ia] += w;
                    rhs[ia] += w;
                }
                (false, true) => {
                    diag[ib] += w;
                    rhs[ib] += w;
                }
                (false, false) => {}
            }
        } else {
            let robin = cfg.robin_h * f.length;
            if ia != usize::MAX {
                diag[ia] += robin;
            }
            if ib != usize::MAX {
                diag[ib] += robin;
            }
        }
    }
    // a region whose free cells see neither Ω nor a Robin face is only possible
    // for h = 0; keep the system definite with the elliptic floor
    for d in &mut diag {
        *d += p.k_eps * 1e-6;
    }
    trip.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
    let mat = CsrMatrix::from_triplets(m, trip);
    let mut y = vec![0.5; m];
    pcg(&mat, &rhs, &mut y, p.cg_tol, p.cg_max_iter.max(4 * m))?;
    let values = (0..n)
        .map(|i| {
            if omega[i] {
                1.0
            } else if index[i] != usize::MAX {
                y[index[i]].clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    GridField::from_values(*grid, values)
}

/// Ω made of the disk of radius `rho0` at the origin plus a small disk.
pub fn disk_with_inclusion(rho0: f64, inclusion_center: [f64; 2], inclusion_radius: f64) -> OmegaSpec {
    OmegaSpec::DiskUnion(vec![
        crate::model::Disk {
            center: [0.0, 0.0],
            radius: rho0,
        },
        crate::model::Disk {
            center: inclusion_center,
            radius: inclusion_radius,
        },
    ])
}
