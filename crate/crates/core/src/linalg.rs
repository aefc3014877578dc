//! Compressed sparse rows plus the Krylov and relaxation solvers used by the
//! implicit steps.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Row-by-row CSR assembly. Duplicate columns within a row are summed.
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    scratch: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n: usize, nnz_hint: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            n,
            row_ptr,
            cols: Vec::with_capacity(nnz_hint),
            vals: Vec::with_capacity(nnz_hint),
            scratch: Vec::with_capacity(8),
        }
    }

    #[inline]
    pub fn add(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.n);
        self.scratch.push((col, val));
    }

    pub fn finish_row(&mut self) {
        self.scratch.sort_unstable_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in &self.scratch {
            if last == Some(c) {
                *self.vals.last_mut().unwrap() += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = Some(c);
            }
        }
        self.scratch.clear();
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> CsrMatrix {
        assert_eq!(self.row_ptr.len(), self.n + 1, "every row must be finished");
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        }
    }
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterator over `(col, value)` of one row.
    #[inline]
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `y = A^T x`.
    pub fn transpose_matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate().take(self.n) {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.cols[k]] += self.vals[k] * xi;
            }
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.cols[k];
                let dst = next[c];
                cols[dst] = i;
                vals[dst] = self.vals[k];
                next[c] += 1;
            }
        }
        CsrMatrix {
            n: self.n,
            row_ptr: counts,
            cols,
            vals,
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - t.get(i, j)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub const fn new(rel: f64, abs: f64, max_iter: usize) -> Self {
        Self { rel, abs, max_iter }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct Jacobi {
    inv: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        let inv = a
            .diag()
            .into_iter()
            .map(|d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Self { inv }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv) {
            *z = r * d;
        }
    }
}

/// Zero-fill incomplete Cholesky factor of a symmetric matrix.
///
/// Pivots that collapse (singular Neumann operators) fall back to the
/// original diagonal, which keeps the preconditioner positive definite.
#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl IncompleteCholesky {
    pub fn new(a: &CsrMatrix) -> Self {
        let n = a.n();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = vec![0.0; n];
        row_ptr.push(0);
        for i in 0..n {
            let start = cols.len();
            let mut aii = 0.0;
            for (j, v) in a.row(i) {
                if j < i {
                    cols.push(j);
                    vals.push(v);
                } else if j == i {
                    aii = v;
                }
            }
            let end = cols.len();
            for p in start..end {
                let k = cols[p];
                // s = sum_{j<k} L_ij L_kj over the shared pattern
                let (mut pi, mut pk) = (start, row_ptr[k]);
                let kend = row_ptr[k + 1];
                let mut s = 0.0;
                while pi < p && pk < kend {
                    match cols[pi].cmp(&cols[pk]) {
                        std::cmp::Ordering::Less => pi += 1,
                        std::cmp::Ordering::Greater => pk += 1,
                        std::cmp::Ordering::Equal => {
                            s += vals[pi] * vals[pk];
                            pi += 1;
                            pk += 1;
                        }
                    }
                }
                vals[p] = (vals[p] - s) / diag[k];
            }
            let sq: f64 = vals[start..end].iter().map(|v| v * v).sum();
            let piv = aii - sq;
            diag[i] = if piv > 1e-12 * aii.abs().max(f64::MIN_POSITIVE) {
                piv.sqrt()
            } else {
                aii.abs().max(1e-300).sqrt()
            };
            row_ptr.push(end);
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
            diag,
        }
    }
}

impl Preconditioner for IncompleteCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for i in 0..self.n {
            let mut s = r[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = s / self.diag[i];
        }
        for i in (0..self.n).rev() {
            z[i] /= self.diag[i];
            let zi = z[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                z[self.cols[p]] -= self.vals[p] * zi;
            }
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Preconditioned conjugate gradients for symmetric positive (semi)definite
/// systems. `x` holds the initial guess on entry.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    pre: &dyn Preconditioner,
    tol: Tolerance,
    context: &'static str,
) -> Result<SolveStats> {
    let n = a.n();
    if n == 0 {
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let target = (tol.rel * norm2(b)).max(tol.abs);
    let mut rn = norm2(&r);
    if rn <= target {
        return Ok(SolveStats {
            iterations: 0,
            residual: rn,
        });
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=tol.max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            if rn <= 10.0 * target {
                return Ok(SolveStats {
                    iterations: it,
                    residual: rn,
                });
            }
            return Err(Error::Solver {
                context,
                residual: rn,
                iterations: it,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rn = norm2(&r);
        if rn <= target {
            return Ok(SolveStats {
                iterations: it,
                residual: rn,
            });
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if !rn.is_finite() {
        return Err(Error::NonFinite(context.to_string()));
    }
    Err(Error::Solver {
        context,
        residual: rn,
        iterations: tol.max_iter,
    })
}

/// Gauss-Seidel relaxation restricted to `rows`; all other unknowns keep
/// their value in `x`. Converges for the diagonally dominant M-matrices
/// produced by the level-set advection scheme.
pub fn gauss_seidel(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    rows: &[usize],
    tol: Tolerance,
    context: &'static str,
) -> Result<SolveStats> {
    for &i in rows {
        if !(a.get(i, i).abs() > 0.0) {
            return Err(Error::Solver {
                context,
                residual: f64::INFINITY,
                iterations: 0,
            });
        }
    }
    let mut change = f64::INFINITY;
    for it in 1..=tol.max_iter {
        change = 0.0;
        for &i in rows {
            let mut s = b[i];
            let mut d = 0.0;
            for (j, v) in a.row(i) {
                if j == i {
                    d = v;
                } else {
                    s -= v * x[j];
                }
            }
            let xi = s / d;
            change = f64::max(change, (xi - x[i]).abs());
            x[i] = xi;
        }
        if change <= tol.abs {
            return Ok(SolveStats {
                iterations: it,
                residual: change,
            });
        }
    }
    Err(Error::Solver {
        context,
        residual: change,
        iterations: tol.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut b = CsrBuilder::new(n, 3 * n);
        for i in 0..n {
            b.add(i, 2.0 + shift);
            if i > 0 {
                b.add(i - 1, -1.0);
            }
            if i + 1 < n {
                b.add(i + 1, -1.0);
            }
            b.finish_row();
        }
        b.build()
    }

    #[test]
    fn builder_merges_duplicates() {
        let mut b = CsrBuilder::new(2, 4);
        b.add(1, 1.0);
        b.add(0, 2.0);
        b.add(1, 0.5);
        b.finish_row();
        b.add(1, 3.0);
        b.finish_row();
        let m = b.build();
        assert_eq!(m.get(0, 1), 1.5);
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn transpose_matches_transpose_matvec() {
        let mut b = CsrBuilder::new(3, 6);
        b.add(0, 1.0);
        b.add(2, 4.0);
        b.finish_row();
        b.add(1, -2.0);
        b.finish_row();
        b.add(0, 0.5);
        b.add(1, 3.0);
        b.finish_row();
        let m = b.build();
        let x = [1.0, 2.0, 3.0];
        let mut y1 = [0.0; 3];
        m.transpose_matvec(&x, &mut y1);
        let y2 = m.transpose().mul(&x);
        assert_eq!(y1, y2.as_slice());
    }

    #[test]
    fn pcg_solves_spd_with_both_preconditioners() {
        let a = laplacian_1d(50, 0.01);
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul(&xs);
        for pre in [
            Box::new(Jacobi::new(&a)) as Box<dyn Preconditioner>,
            Box::new(IncompleteCholesky::new(&a)),
        ] {
            let mut x = vec![0.0; 50];
            pcg(&a, &b, &mut x, pre.as_ref(), Tolerance::new(1e-13, 0.0, 500), "test").unwrap();
            for (u, v) in x.iter().zip(&xs) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ic0_is_exact_for_tridiagonal() {
        // No fill-in for a tridiagonal matrix, so one application solves it.
        let a = laplacian_1d(20, 0.5);
        let b: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ic = IncompleteCholesky::new(&a);
        let mut z = vec![0.0; 20];
        ic.apply(&b, &mut z);
        let r = a.mul(&z);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn gauss_seidel_converges_on_dominant_matrix() {
        let a = laplacian_1d(10, 1.0);
        let b = vec![1.0; 10];
        let mut x = vec![0.0; 10];
        let rows: Vec<usize> = (0..10).collect();
        gauss_seidel(&a, &b, &mut x, &rows, Tolerance::new(0.0, 1e-14, 1000), "gs").unwrap();
        let r = a.mul(&x);
        assert!(r.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}
