//! Linear solvers for the symmetric positive definite systems produced by the
//! field solvers: a banded Cholesky factorization for the fitted-mesh problem
//! and incomplete-Cholesky preconditioned CG for the Cartesian grid problems.

use crate::error::{Error, Result};

/// Symmetric positive definite matrix in lower band storage.
#[derive(Clone, Debug)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    /// Row `i` holds columns `i-bw ..= i` at offsets `0 ..= bw`.
    band: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        let s = self.slot(r, c);
        self.band[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        if r - c > self.bw {
            return 0.0;
        }
        self.band[self.slot(r, c)]
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.band[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            for j in lo..i {
                let a = row[j + self.bw - i];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += row[self.bw] * x[i];
        }
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn factor(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.band.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = l[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in klo..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::fault(
                            format!("matrix is not positive definite (pivot {s:e} at row {i})"),
                            vec![s],
                        ));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Cholesky factor of a [`BandedSpd`] matrix.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            let mut s = x[i];
            for k in lo..i {
                s -= self.l[ri + k] * x[k];
            }
            x[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            x[i] /= self.l[i * w + bw];
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            for k in lo..i {
                x[k] -= self.l[ri + k] * xi;
            }
        }
        x
    }

    /// Smallest and largest diagonal entries of the factor; their squared ratio
    /// is a cheap conditioning indicator.
    pub fn pivot_range(&self) -> (f64, f64) {
        let w = self.bw + 1;
        (0..self.n)
            .map(|i| self.l[i * w + self.bw])
            .fold((f64::MAX, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)))
    }
}

/// Solves `A x = b` by Cholesky plus iterative refinement until the relative
/// residual is at most `tol`. Returns the solution and the residual history.
pub fn solve_banded(a: &BandedSpd, b: &[f64], tol: f64, max_refine: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let chol = a.factor()?;
    let mut x = chol.solve(b);
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; b.len()];
    let mut history = Vec::new();
    for _ in 0..=max_refine {
        a.matvec(&x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok((x, history));
        }
        let dx = chol.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
    }
    Err(Error::fault(
        format!("banded solve stalled at relative residual {:e}", history.last().unwrap()),
        history,
    ))
}

/// Square sparse matrix in compressed row form with sorted column indices.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            y[i] = s;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&p| self.cols[p] == i)
                    .map(|p| self.vals[p])
                    .unwrap_or(0.0)
            })
            .collect()
    }
}

/// Zero-fill incomplete Cholesky factor.
struct IncompleteCholesky {
    n: usize,
    /// Strict lower part of L by rows, then the diagonal separately.
    lrow_ptr: Vec<usize>,
    lcols: Vec<usize>,
    lvals: Vec<f64>,
    diag: Vec<f64>,
}

impl IncompleteCholesky {
    fn new(a: &CsrMatrix) -> Option<Self> {
        let n = a.n;
        let mut lrow_ptr = vec![0usize; n + 1];
        let mut lcols = Vec::new();
        let mut lvals = Vec::new();
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let start = lcols.len();
            let mut aii = 0.0;
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.cols[p];
                if j < i {
                    lcols.push(j);
                    lvals.push(a.vals[p]);
                } else if j == i {
                    aii = a.vals[p];
                }
            }
            let end = lcols.len();
            for q in start..end {
                let k = lcols[q];
                // dot of row i (cols < k) with row k (cols < k)
                let mut s = lvals[q];
                let (mut pi, mut pk) = (start, lrow_ptr[k]);
                let kend = lrow_ptr[k + 1];
                while pi < q && pk < kend {
                    let (ci, ck) = (lcols[pi], lcols[pk]);
                    if ci == ck {
                        s -= lvals[pi] * lvals[pk];
                        pi += 1;
                        pk += 1;
                    } else if ci < ck {
                        pi += 1;
                    } else {
                        pk += 1;
                    }
                }
                lvals[q] = s / diag[k];
            }
            let mut d = aii;
            for q in start..end {
                d -= lvals[q] * lvals[q];
            }
            if !(d > 0.0) {
                return None;
            }
            diag[i] = d.sqrt();
            lrow_ptr[i + 1] = end;
        }
        Some(IncompleteCholesky {
            n,
            lrow_ptr,
            lcols,
            lvals,
            diag,
        })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for i in 0..self.n {
            let mut s = z[i];
            for p in self.lrow_ptr[i]..self.lrow_ptr[i + 1] {
                s -= self.lvals[p] * z[self.lcols[p]];
            }
            z[i] = s / self.diag[i];
        }
        for i in (0..self.n).rev() {
            z[i] /= self.diag[i];
            let zi = z[i];
            for p in self.lrow_ptr[i]..self.lrow_ptr[i + 1] {
                z[self.lcols[p]] -= self.lvals[p] * zi;
            }
        }
    }
}

/// Outcome of a preconditioned conjugate gradient solve.
#[derive(Clone, Debug)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned CG on an SPD matrix, starting from `x`. Uses IC(0) when it
/// exists and Jacobi otherwise.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgReport> {
    let n = a.n;
    let ic = IncompleteCholesky::new(a);
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| 1.0 / d).collect();
    let precond = |r: &[f64], z: &mut [f64]| match &ic {
        Some(ic) => ic.apply(r, z),
        None => z.iter_mut().zip(r).zip(&inv_diag).for_each(|((zi, ri), di)| *zi = ri * di),
    };
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();
    for it in 0..=max_iter {
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok(CgReport {
                iterations: it,
                relative_residual: rel,
            });
        }
        if it % 50 == 0 {
            history.push(rel);
        }
        a.matvec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    history.push(norm(&r) / bnorm);
    Err(Error::fault(
        format!("conjugate gradients did not converge in {max_iter} iterations"),
        history,
    ))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> BandedSpd {
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn banded_cholesky_solves_tridiagonal() {
        let n = 50;
        let a = laplacian_1d(n);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x_true, &mut b);
        let (x, hist) = solve_banded(&a, &b, 1e-12, 2).unwrap();
        assert!(hist.last().unwrap() <= &1e-12);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-10);
        }
    }

    #[test]
    fn banded_matches_dense_on_wider_band() {
        // random SPD with bandwidth 3: diagonally dominant
        let n = 20;
        let bw = 3;
        let mut a = BandedSpd::zeros(n, bw);
        let mut seed = 7u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            a.add(i, i, 4.0);
            for j in i.saturating_sub(bw)..i {
                a.add(i, j, rnd());
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x = a.factor().unwrap().solve(&b);
        let mut ax = vec![0.0; n];
        a.matvec(&x, &mut ax);
        for (l, r) in ax.iter().zip(&b) {
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let mut a = laplacian_1d(4);
        a.add(2, 2, -10.0);
        assert!(matches!(a.factor(), Err(Error::SolverFault { .. })));
    }

    #[test]
    fn pcg_on_grid_laplacian() {
        let m = 30;
        let n = m * m;
        let mut t = Vec::new();
        for j in 0..m {
            for i in 0..m {
                let k = j * m + i;
                t.push((k, k, 4.0 + 0.01));
                if i > 0 {
                    t.push((k, k - 1, -1.0));
                }
                if i + 1 < m {
                    t.push((k, k + 1, -1.0));
                }
                if j > 0 {
                    t.push((k, k - m, -1.0));
                }
                if j + 1 < m {
                    t.push((k, k + m, -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let b: Vec<f64> = (0..n).map(|k| ((k * 37) % 11) as f64 - 5.0).collect();
        let mut x = vec![0.0; n];
        let rep = pcg(&a, &b, &mut x, 1e-11, 500).unwrap();
        assert!(rep.relative_residual <= 1e-11);
        let mut ax = vec![0.0; n];
        a.matvec(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8);
    }
}
