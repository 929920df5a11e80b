//! Measurements of structural properties on solver output: lower temperature
//! bound, jump-set density, blow-up energies and flatness, first-variation
//! residuals and planar hole geometry.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CellMask, FaceSet, GridField, ProblemConfig};
use crate::robin::{solve_state, StarShape, StateSolution};
use crate::shape_opt::{stationarity_density, OptResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub delta_cut: f64,
    /// Minimum of `u` over `{u > delta_cut}`; `None` when that set is empty.
    pub delta_obs: Option<f64>,
    /// Minimum over positive cells with no zero-phase neighbour.
    pub delta_core: Option<f64>,
    /// Area fraction of cells with `u ∈ (delta_cut, 0.9·delta_core)`.
    pub gap_mass: f64,
    /// `perimeter(positive set)·dx / domain area`.
    pub halo_budget: f64,
    pub violation: bool,
}

/// Measures the gap between the zero phase and the positive values of `u`.
///
/// The minimum over all positive cells is reported as `delta_obs`. Taken
/// literally, the mass below `0.9·delta_obs` is always zero; the gap mass is
/// therefore measured below `0.9·delta_core`, the minimum away from the
/// one-cell halo along the free boundary, and compared against the area of
/// that halo.
pub fn check_lower_bound(u: &GridField, delta_cut: f64) -> Result<LowerBoundReport> {
    u.validate_unit_range(1e-12)?;
    if !(delta_cut > 0.0 && delta_cut < 1.0) {
        return Err(Error::precondition("delta_cut must lie in (0, 1)"));
    }
    let grid = u.grid();
    let positive: Vec<bool> = u.values.iter().map(|&v| v > delta_cut).collect();
    let mut delta_obs: Option<f64> = None;
    let mut delta_core: Option<f64> = None;
    for k in 0..grid.len() {
        if !positive[k] {
            continue;
        }
        let v = u.values[k];
        delta_obs = Some(delta_obs.map_or(v, |d| d.min(v)));
        if grid.neighbors(k).all(|nb| positive[nb]) {
            delta_core = Some(delta_core.map_or(v, |d| d.min(v)));
        }
    }
    let gap_cells = match delta_core {
        Some(dc) => u.values.iter().filter(|&&v| v > delta_cut && v < 0.9 * dc).count(),
        None => 0,
    };
    let gap_mass = gap_cells as f64 * grid.cell_area() / grid.area();
    let mask = CellMask::from_fn(grid, |k| positive[k]);
    let halo_budget = mask.boundary_length() * grid.spacing[0].max(grid.spacing[1]) / grid.area();
    Ok(LowerBoundReport {
        delta_cut,
        delta_obs,
        delta_core,
        gap_mass,
        halo_budget,
        violation: gap_mass > halo_budget,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub point: [f64; 2],
    pub radius: f64,
    /// Face-counted length of `K ∩ B_r(point)` divided by `r`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub samples: Vec<DensitySample>,
    /// `(point, radius, reason)` of skipped balls.
    pub skipped: Vec<([f64; 2], f64, String)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Length of `K` inside balls around sample points, scaled by `r`.
///
/// A face belongs to the ball when its midpoint does. Balls leaving the grid
/// are skipped.
pub fn density_profile(k: &FaceSet, points: &[[f64; 2]], radii: &[f64]) -> Result<DensityReport> {
    let grid = k.grid;
    let dx = grid.spacing[0].max(grid.spacing[1]);
    if let Some(&r) = radii.iter().find(|&&r| !(r >= 4.0 * dx * (1.0 - 1e-12))) {
        return Err(Error::precondition(format!("radius {r} is below 4dx = {}", 4.0 * dx)));
    }
    let faces: Vec<([f64; 2], f64)> = k.faces().map(|f| (f.midpoint, f.length)).collect();
    let e = grid.extent();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for &p in points {
        for &r in radii {
            if p[0] - r < e[0] || p[1] - r < e[1] || p[0] + r > e[2] || p[1] + r > e[3] {
                skipped.push((p, r, "ball leaves the grid".to_string()));
                continue;
            }
            let len: f64 = faces
                .iter()
                .filter(|(m, _)| (m[0] - p[0]).hypot(m[1] - p[1]) < r)
                .map(|(_, l)| l)
                .sum();
            samples.push(DensitySample {
                point: p,
                radius: r,
                ratio: len / r,
            });
        }
    }
    let min_ratio = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = samples.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(DensityReport {
        samples,
        skipped,
        min_ratio,
        max_ratio,
    })
}

/// `count` face midpoints of `k`, evenly spaced in face order.
pub fn sample_points(k: &FaceSet, count: usize) -> Vec<[f64; 2]> {
    let mids: Vec<[f64; 2]> = k.faces().map(|f| f.midpoint).collect();
    if mids.is_empty() || count == 0 {
        return Vec::new();
    }
    (0..count.min(mids.len()))
        .map(|i| mids[i * mids.len() / count.min(mids.len())])
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowupClass {
    FlatCandidate,
    SingularCandidate,
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupOptions {
    /// Flatness below which a point with decaying energy counts as flat.
    pub flat_tol: f64,
    /// Number of sampled line directions before the least-squares refinement.
    pub directions: usize,
    /// A point is a singular candidate when `min e_r ≥ floor_ratio · max e_r`.
    pub floor_ratio: f64,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        BlowupOptions {
            flat_tol: 0.1,
            directions: 8,
            floor_ratio: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub point: [f64; 2],
    pub radii: Vec<f64>,
    /// `r^{-1} ∫_{B_r} |∇u|²` off the jump set.
    pub e_r: Vec<f64>,
    pub flatness: Vec<f64>,
    pub classification: BlowupClass,
    /// Smallest observed `e_r`.
    pub energy_floor: f64,
    pub note: Option<String>,
}

/// Half-width of the thinnest strip containing `pts`, over sampled directions
/// and the principal axis of the point cloud.
pub fn strip_half_width(pts: &[[f64; 2]], directions: usize) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let width = |nu: [f64; 2]| {
        let (lo, hi) = pts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| {
            let d = nu[0] * p[0] + nu[1] * p[1];
            (lo.min(d), hi.max(d))
        });
        0.5 * (hi - lo)
    };
    let mut best = f64::MAX;
    for k in 0..directions.max(1) {
        let t = PI * k as f64 / directions.max(1) as f64;
        best = best.min(width([t.cos(), t.sin()]));
    }
    // least-squares line: the normal is the minor principal axis
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0] / n, b + p[1] / n));
    let (sxx, sxy, syy) = pts.iter().fold((0.0, 0.0, 0.0), |(a, b, c), p| {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        (a + dx * dx, b + dx * dy, c + dy * dy)
    });
    let major = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let normal = major + 0.5 * PI;
    best = best.min(width([normal.cos(), normal.sin()]));
    // local refinement around the best direction
    let mut t_best = normal;
    let mut step = PI / directions.max(1) as f64;
    for _ in 0..30 {
        for t in [t_best - step, t_best + step] {
            let w = width([t.cos(), t.sin()]);
            if w < best {
                best = w;
                t_best = t;
            }
        }
        step *= 0.5;
    }
    best
}

fn classify(radii: &[f64], e_r: &[f64], flatness: &[f64], resolved: bool, opts: &BlowupOptions) -> (BlowupClass, f64) {
    let floor = e_r.iter().copied().fold(f64::INFINITY, f64::min);
    let peak = e_r.iter().copied().fold(0.0, f64::max);
    if !resolved || radii.is_empty() {
        return (BlowupClass::Unresolved, floor);
    }
    let decreasing = e_r.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-14);
    let flat = flatness.last().is_some_and(|&f| f <= opts.flat_tol);
    if decreasing && flat && (peak == 0.0 || floor < opts.floor_ratio * peak) || peak == 0.0 {
        (BlowupClass::FlatCandidate, floor)
    } else if floor > 0.0 && floor >= opts.floor_ratio * peak {
        (BlowupClass::SingularCandidate, floor)
    } else {
        (BlowupClass::Unresolved, floor)
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::precondition("no radii given"));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) || !(radii[radii.len() - 1] > 0.0) {
        return Err(Error::precondition("radii must be positive and strictly decreasing"));
    }
    Ok(())
}

/// Scaled Dirichlet energies and flatness of `K` on shrinking balls.
///
/// Faces in `jumps` are excluded from the Dirichlet sum; flatness uses the
/// midpoints of the jump faces inside each ball.
pub fn blowup_scan(
    u: &GridField,
    jumps: &FaceSet,
    point: [f64; 2],
    radii: &[f64],
    opts: &BlowupOptions,
) -> Result<BlowupReport> {
    check_radii(radii)?;
    let grid = u.grid();
    if !grid.same_as(&jumps.grid) {
        return Err(Error::precondition("jump set lives on a different grid"));
    }
    let dx = grid.spacing[0].max(grid.spacing[1]);
    let e = grid.extent();
    let mut note = None;
    let mut resolved = true;
    if radii[radii.len() - 1] < 2.0 * dx {
        resolved = false;
        note = Some(format!("radii below 2dx = {:.3e}", 2.0 * dx));
    }
    let r0 = radii[0];
    if point[0] - r0 < e[0] || point[1] - r0 < e[1] || point[0] + r0 > e[2] || point[1] + r0 > e[3] {
        resolved = false;
        note = Some("largest ball leaves the grid".into());
    }
    let mut dirichlet: Vec<([f64; 2], f64)> = Vec::new();
    let mut k_pts: Vec<[f64; 2]> = Vec::new();
    for f in grid.faces() {
        if (f.midpoint[0] - point[0]).hypot(f.midpoint[1] - point[1]) >= r0 {
            continue;
        }
        if jumps.contains(&f) {
            k_pts.push(f.midpoint);
        } else {
            let d = u.values[f.a] - u.values[f.b];
            dirichlet.push((f.midpoint, d * d * f.length / f.distance));
        }
    }
    let inside = |m: &[f64; 2], r: f64| (m[0] - point[0]).hypot(m[1] - point[1]) < r;
    let mut e_r = Vec::with_capacity(radii.len());
    let mut flatness = Vec::with_capacity(radii.len());
    for &r in radii {
        e_r.push(dirichlet.iter().filter(|(m, _)| inside(m, r)).map(|(_, v)| v).sum::<f64>() / r);
        let pts: Vec<[f64; 2]> = k_pts.iter().copied().filter(|m| inside(m, r)).collect();
        flatness.push(strip_half_width(&pts, opts.directions) / r);
    }
    let (classification, energy_floor) = classify(radii, &e_r, &flatness, resolved, opts);
    Ok(BlowupReport {
        point,
        radii: radii.to_vec(),
        e_r,
        flatness,
        classification,
        energy_floor,
        note,
    })
}

/// [`blowup_scan`] on a boundary-fitted state: cell gradients of the mapped
/// mesh and `K = ∂A` sampled at `samples` points.
pub fn blowup_scan_state(
    state: &StateSolution,
    point: [f64; 2],
    radii: &[f64],
    samples: usize,
    opts: &BlowupOptions,
) -> Result<BlowupReport> {
    check_radii(radii)?;
    let (ns, nt) = (state.n_s, state.n_theta);
    let mut cells: Vec<([f64; 2], f64)> = Vec::with_capacity(ns * nt);
    let mut h_max: f64 = 0.0;
    for i in 0..ns {
        for j in 0..nt {
            let jn = (j + 1) % nt;
            let p00 = state.node_position(i, j);
            let p10 = state.node_position(i + 1, j);
            let p01 = state.node_position(i, jn);
            let p11 = state.node_position(i + 1, jn);
            let d1 = [p11[0] - p00[0], p11[1] - p00[1]];
            let d2 = [p10[0] - p01[0], p10[1] - p01[1]];
            let du1 = state.node(i + 1, jn) - state.node(i, j);
            let du2 = state.node(i + 1, j) - state.node(i, jn);
            let det = d1[0] * d2[1] - d1[1] * d2[0];
            let gx = (du1 * d2[1] - du2 * d1[1]) / det;
            let gy = (d1[0] * du2 - d2[0] * du1) / det;
            let area = 0.5 * det.abs();
            let c = [
                0.25 * (p00[0] + p10[0] + p01[0] + p11[0]),
                0.25 * (p00[1] + p10[1] + p01[1] + p11[1]),
            ];
            cells.push((c, (gx * gx + gy * gy) * area));
            h_max = h_max.max(d1[0].hypot(d1[1])).max(d2[0].hypot(d2[1]));
        }
    }
    let k_pts: Vec<[f64; 2]> = (0..samples.max(8))
        .map(|m| state.shape.point(2.0 * PI * m as f64 / samples.max(8) as f64))
        .collect();
    let inside = |m: &[f64; 2], r: f64| (m[0] - point[0]).hypot(m[1] - point[1]) < r;
    let mut e_r = Vec::new();
    let mut flatness = Vec::new();
    for &r in radii {
        e_r.push(cells.iter().filter(|(c, _)| inside(c, r)).map(|(_, v)| v).sum::<f64>() / r);
        let pts: Vec<[f64; 2]> = k_pts.iter().copied().filter(|m| inside(m, r)).collect();
        flatness.push(strip_half_width(&pts, opts.directions) / r);
    }
    let resolved = radii[radii.len() - 1] >= 2.0 * h_max;
    let note = (!resolved).then(|| format!("radii below twice the mesh size {h_max:.3e}"));
    let (classification, energy_floor) = classify(radii, &e_r, &flatness, resolved, opts);
    Ok(BlowupReport {
        point,
        radii: radii.to_vec(),
        e_r,
        flatness,
        classification,
        energy_floor,
        note,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElResidual {
    pub sup: f64,
    pub mean: f64,
    /// First-variation density at the angular nodes.
    pub density: Vec<f64>,
}

/// Pointwise first-variation density of a solved state along `∂A`.
pub fn el_residual(state: &StateSolution, shape: &StarShape, cfg: &ProblemConfig) -> Result<ElResidual> {
    if state.shape != *shape {
        return Err(Error::precondition("state was solved on a different shape"));
    }
    if state.robin_h != cfg.robin_h || state.volume_cost != cfg.volume_cost {
        return Err(Error::precondition("state was solved with different parameters"));
    }
    let density = stationarity_density(state, cfg);
    let sup = density.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mean = density.iter().sum::<f64>() / density.len() as f64;
    Ok(ElResidual { sup, mean, density })
}

/// [`el_residual`] of an optimizer result, re-solved at the given resolution.
/// Non-converged results are refused.
pub fn el_residual_of(result: &OptResult, cfg: &ProblemConfig, n_s: usize, n_theta: usize) -> Result<ElResidual> {
    if !result.converged {
        return Err(Error::precondition(
            "optimizer did not converge; the first-variation density is only meaningful at a stationary shape",
        ));
    }
    let state = solve_state(&result.shape, cfg, n_s, n_theta)?;
    el_residual(&state, &result.shape, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoleReport {
    pub cells: usize,
    pub area: f64,
    /// `area(hull)/area − 1`, the hull counted in cells whose centres it contains.
    pub convexity_defect: f64,
    /// Thinnest projection width over 8 directions divided by the perimeter.
    pub roundness: f64,
    /// Distance to the rest of the jump set divided by the perimeter; `None`
    /// when no other jump faces exist.
    pub separation_ratio: Option<f64>,
}

/// Cross product of `(a − o)` and `(b − o)` on integer points.
fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull of integer points (monotone chain), counter-clockwise, without
/// collinear vertices.
pub fn lattice_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(i64, i64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Whether `p` lies in the closed convex polygon `hull` (counter-clockwise).
fn in_hull(hull: &[(i64, i64)], p: (i64, i64)) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == p,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            cross(a, b, p) == 0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
        }
        n => (0..n).all(|k| cross(hull[k], hull[(k + 1) % n], p) >= 0),
    }
}

/// Number of lattice points in the convex hull of the given cells.
pub fn hull_cell_count(cells: &[(i64, i64)]) -> usize {
    let hull = lattice_hull(cells);
    if hull.is_empty() {
        return 0;
    }
    let (x0, x1) = hull.iter().fold((i64::MAX, i64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = hull.iter().fold((i64::MAX, i64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let mut count = 0;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if in_hull(&hull, (x, y)) {
                count += 1;
            }
        }
    }
    count
}

/// `hull cells / cells − 1` for a set of cell indices.
pub fn convexity_defect(cells: &[(i64, i64)]) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    let mut c = cells.to_vec();
    c.sort_unstable();
    c.dedup();
    hull_cell_count(&c) as f64 / c.len() as f64 - 1.0
}

/// Geometry of bounded zero-phase components. Masks touching the grid
/// border are skipped (`None`).
pub fn hole_geometry(holes: &[CellMask], jumps: Option<&FaceSet>) -> Vec<Option<HoleReport>> {
    holes
        .iter()
        .map(|mask| {
            let grid = mask.grid;
            let idx: Vec<usize> = (0..grid.len()).filter(|&k| mask.cells[k]).collect();
            if idx.is_empty() || idx.iter().any(|&k| grid.on_border(k)) {
                return None;
            }
            let cells: Vec<(i64, i64)> = idx
                .iter()
                .map(|&k| {
                    let (i, j) = grid.coords(k);
                    (i as i64, j as i64)
                })
                .collect();
            let (dx, dy) = (grid.spacing[0], grid.spacing[1]);
            let perimeter = mask.boundary_length();
            let mut min_width = f64::MAX;
            for d in 0..8 {
                let t = PI * d as f64 / 8.0;
                let (c, s) = (t.cos(), t.sin());
                let (lo, hi) = cells.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &(i, j)| {
                    let corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
                    corners.iter().fold((lo, hi), |(lo, hi), (a, b)| {
                        let v = c * (i as f64 + a) * dx + s * (j as f64 + b) * dy;
                        (lo.min(v), hi.max(v))
                    })
                });
                min_width = min_width.min(hi - lo);
            }
            let separation_ratio = jumps.and_then(|k| {
                let own = FaceSet::boundary_of(mask);
                let own_mid: Vec<[f64; 2]> = own.faces().map(|f| f.midpoint).collect();
                k.faces()
                    .filter(|f| !own.contains(f))
                    .flat_map(|f| own_mid.iter().map(move |m| (m[0] - f.midpoint[0]).hypot(m[1] - f.midpoint[1])))
                    .reduce(f64::min)
                    .map(|d| d / perimeter)
            });
            Some(HoleReport {
                cells: cells.len(),
                area: cells.len() as f64 * dx * dy,
                convexity_defect: convexity_defect(&cells),
                roundness: min_width / perimeter,
                separation_ratio,
            })
        })
        .collect()
}

/// One mask per zero-phase label.
pub fn component_masks(grid: crate::model::Grid, labels: &[u32]) -> Vec<CellMask> {
    let count = labels.iter().copied().max().unwrap_or(0) as usize;
    (1..=count)
        .map(|l| CellMask::from_fn(grid, |k| labels[k] == l as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;

    #[test]
    fn lower_bound_trivial_fields() {
        let grid = Grid::square(8, [0.0, 0.0], 1.0);
        let f = GridField::from_fn(grid, |p| if p[0] < -0.3 { 0.0 } else if p[0] < 0.3 { 0.5 } else { 1.0 });
        let r = check_lower_bound(&f, 0.05).unwrap();
        assert_eq!(r.delta_obs, Some(0.5));
        assert_eq!(r.gap_mass, 0.0);
        let mut g = f.clone();
        g.values[20] = 0.07;
        assert_eq!(check_lower_bound(&g, 0.05).unwrap().delta_obs, Some(0.07));
    }

    #[test]
    fn l_shape_defect() {
        let cells = [(0, 0), (0, 1), (0, 2), (1, 0), (2, 0)];
        assert!((convexity_defect(&cells) - 0.2).abs() < 1e-15);
        let square: Vec<(i64, i64)> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
        assert_eq!(convexity_defect(&square), 0.0);
    }

    #[test]
    fn strip_of_collinear_points_is_thin() {
        let pts: Vec<[f64; 2]> = (0..20).map(|k| [k as f64, 0.37 * k as f64]).collect();
        assert!(strip_half_width(&pts, 8) < 1e-9);
    }
}
