//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Energy of the concentric configuration, written out from the harmonic
/// profile: the Dirichlet plus Robin part equals the flux through `∂Ω`.
pub fn radial_energy(n: usize, h: f64, c0: f64, rho0: f64, r: f64) -> f64 {
    match n {
        2 => 2.0 * PI * h / (1.0 / r + h * (r / rho0).ln()) + c0 * PI * (r * r - rho0 * rho0),
        3 => {
            4.0 * PI / (1.0 / rho0 + 1.0 / (h * r * r) - 1.0 / r)
                + c0 * 4.0 / 3.0 * PI * (r.powi(3) - rho0.powi(3))
        }
        _ => unreachable!(),
    }
}

pub fn radial_energy_dr(n: usize, h: f64, c0: f64, rho0: f64, r: f64) -> f64 {
    match n {
        2 => {
            let den = 1.0 / r + h * (r / rho0).ln();
            -2.0 * PI * h * (-1.0 / (r * r) + h / r) / (den * den) + 2.0 * PI * c0 * r
        }
        3 => {
            let den = 1.0 / rho0 + 1.0 / (h * r * r) - 1.0 / r;
            -4.0 * PI * (-2.0 / (h * r.powi(3)) + 1.0 / (r * r)) / (den * den) + 4.0 * PI * c0 * r * r
        }
        _ => unreachable!(),
    }
}

/// Brute-force radial minimizer: a `points`-point scan of the energy, then
/// bisection of the derivative inside the bracket around the best sample.
pub fn radial_scan(n: usize, h: f64, c0: f64, rho0: f64, points: usize) -> (f64, f64) {
    let f0 = radial_energy(n, h, c0, rho0, rho0);
    let r_max = rho0 + 2.0 * (f0 / c0).powf(1.0 / n as f64);
    let step = (r_max - rho0) / (points - 1) as f64;
    let (mut best, mut best_f) = (0, f0);
    for i in 1..points {
        let f = radial_energy(n, h, c0, rho0, rho0 + i as f64 * step);
        if f < best_f {
            best = i;
            best_f = f;
        }
    }
    if best == 0 {
        return (rho0, f0);
    }
    let (mut lo, mut hi) = (rho0 + (best - 1) as f64 * step, rho0 + ((best + 1).min(points - 1)) as f64 * step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if radial_energy_dr(n, h, c0, rho0, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    (r, radial_energy(n, h, c0, rho0, r))
}

/// `ceil(a/b)` and `floor(a/b)` for `b > 0`.
fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

fn div_floor(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

const MAX_ROWS: usize = 16;
const MAX_POINTS: usize = 2 * MAX_ROWS;

/// Lattice bounds of the hull of a point set, row by row.
///
/// The hull meets a horizontal line in a segment whose ends lie on segments
/// between two points of the set, so the bounds are taken over all pairs,
/// in exact integer arithmetic. Only the two extreme points of each row
/// matter, so at most `2·MAX_ROWS` points are kept.
#[derive(Clone, Copy)]
pub struct RowHull {
    points: [(i64, i64); MAX_POINTS],
    len: usize,
    /// `(lo, hi)` lattice range of the hull in each row; empty when `lo > hi`.
    pub rows: [(i64, i64); MAX_ROWS],
    height: usize,
}

impl RowHull {
    pub fn new(height: usize) -> Self {
        assert!(height <= MAX_ROWS);
        RowHull {
            points: [(0, 0); MAX_POINTS],
            len: 0,
            rows: [(i64::MAX, i64::MIN); MAX_ROWS],
            height,
        }
    }

    fn cover(rows: &mut [(i64, i64); MAX_ROWS], p: (i64, i64), q: (i64, i64)) {
        let (a, b) = if p.1 <= q.1 { (p, q) } else { (q, p) };
        if a.1 == b.1 {
            let r = &mut rows[a.1 as usize];
            r.0 = r.0.min(a.0.min(b.0));
            r.1 = r.1.max(a.0.max(b.0));
            return;
        }
        let dy = b.1 - a.1;
        for y in a.1..=b.1 {
            // x = a.x + (b.x - a.x)(y - a.y)/dy
            let num = a.0 * dy + (b.0 - a.0) * (y - a.1);
            let r = &mut rows[y as usize];
            r.0 = r.0.min(div_ceil(num, dy));
            r.1 = r.1.max(div_floor(num, dy));
        }
    }

    pub fn add(&mut self, q: (i64, i64)) {
        assert!(self.len < MAX_POINTS && (q.1 as usize) < self.height);
        Self::cover(&mut self.rows, q, q);
        for k in 0..self.len {
            Self::cover(&mut self.rows, self.points[k], q);
        }
        self.points[self.len] = q;
        self.len += 1;
    }

    pub fn lattice_count(&self) -> usize {
        self.rows[..self.height]
            .iter()
            .map(|&(lo, hi)| if lo <= hi { (hi - lo + 1) as usize } else { 0 })
            .sum()
    }
}

/// Lattice points in the convex hull of `cells` (rows `0..16`).
pub fn hull_lattice_count(cells: &[(i64, i64)]) -> usize {
    let height = cells.iter().map(|c| c.1).max().map_or(0, |m| m as usize + 1);
    let mut extremes = vec![(i64::MAX, i64::MIN); height];
    for &(x, y) in cells {
        let e = &mut extremes[y as usize];
        *e = (e.0.min(x), e.1.max(x));
    }
    let mut hull = RowHull::new(height);
    for (y, &(lo, hi)) in extremes.iter().enumerate() {
        if lo <= hi {
            hull.add((lo, y as i64));
            if hi > lo {
                hull.add((hi, y as i64));
            }
        }
    }
    hull.lattice_count()
}

/// Every digitally convex cell set in a `width × height` box whose bottom row
/// is occupied, as row intervals (`None` for an empty row).
pub fn digitally_convex_sets(width: i64, height: usize, mut visit: impl FnMut(&[Option<(i64, i64)>])) {
    fn go(
        width: i64,
        height: usize,
        rows: &mut Vec<Option<(i64, i64)>>,
        hull: &RowHull,
        visit: &mut dyn FnMut(&[Option<(i64, i64)>]),
    ) {
        let y = rows.len();
        if y == height {
            visit(rows);
            return;
        }
        if y > 0 {
            // an empty row is valid as long as later rows keep it uncovered
            rows.push(None);
            go(width, height, rows, hull, visit);
            rows.pop();
        }
        let fits = |rows: &[Option<(i64, i64)>], hull: &RowHull| {
            rows.iter().enumerate().all(|(yy, r)| {
                let (lo, hi) = hull.rows[yy];
                match r {
                    Some((a, b)) => lo == *a && hi == *b,
                    None => lo > hi,
                }
            })
        };
        for a in 0..width {
            let mut left = *hull;
            left.add((a, y as i64));
            for b in a..width {
                let mut next = left;
                if b > a {
                    next.add((b, y as i64));
                }
                rows.push(Some((a, b)));
                let ok = fits(rows, &next);
                if ok {
                    go(width, height, rows, &next, visit);
                }
                rows.pop();
                // a longer row only enlarges the hull
                if !ok {
                    break;
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(height);
    go(width, height, &mut rows, &RowHull::new(height), &mut visit);
}

pub fn cells_of(rows: &[Option<(i64, i64)>]) -> Vec<(i64, i64)> {
    rows.iter()
        .enumerate()
        .filter_map(|(y, r)| r.map(|(a, b)| (a..=b).map(move |x| (x, y as i64))))
        .flatten()
        .collect()
}
