//! Row-sparse matrices and the orthogonal factorizations used by the solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Matrix stored as sparse rows of `(column, value)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Rows {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Rows {
    pub fn new(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        Rows { ncols, rows }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// `out = M x`
    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (o, r) in out.iter_mut().zip(&self.rows) {
            *o = r.iter().map(|&(j, v)| v * x[j]).sum();
        }
    }

    /// `out += Mᵀ y`
    pub fn tmul_add(&self, y: &[f64], out: &mut [f64]) {
        for (r, &yr) in self.rows.iter().zip(y) {
            if yr != 0.0 {
                for &(j, v) in r {
                    out[j] += v * yr;
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        self.mul(x, &mut out);
        out
    }

    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        self.tmul_add(y, &mut out);
        out
    }
}

/// Upper-triangular `R` with `RᵀR = BᵀB`, built one row of `B` at a time by
/// Givens rotations. Working on `B` instead of `BᵀB` keeps the precision
/// loss near `cond(B)` rather than `cond(B)²`; bands in `B` stay banded in
/// `R`, and each merge only touches the band.
#[derive(Debug, Clone)]
pub(crate) struct GivensQr {
    /// Row `j` holds columns `j..j + rows[j].len()`.
    rows: Vec<Vec<f64>>,
}

impl GivensQr {
    pub fn new(n: usize) -> Self {
        GivensQr { rows: vec![Vec::new(); n] }
    }

    /// Merges the dense row `row`, whose nonzeros lie in `lo..hi`. The
    /// scratch row is left zeroed.
    pub fn add_row(&mut self, row: &mut [f64], lo: usize, hi: usize) {
        let mut hi = hi;
        let mut j = lo;
        while j < hi {
            let x = row[j];
            if x == 0.0 {
                j += 1;
                continue;
            }
            let rj = &mut self.rows[j];
            if rj.is_empty() {
                let sign = x.signum();
                rj.extend(row[j..hi].iter().map(|v| sign * v));
                for v in &mut row[j..hi] {
                    *v = 0.0;
                }
                break;
            }
            if j + rj.len() < hi {
                rj.resize(hi - j, 0.0);
            }
            let stop = j + rj.len();
            let rad = crate::math::hypot(rj[0], x);
            let (c, s) = (rj[0] / rad, x / rad);
            for (u, v) in rj.iter_mut().zip(&mut row[j..stop]) {
                let (a, b) = (*u, *v);
                *u = c * a + s * b;
                *v = -s * a + c * b;
            }
            row[j] = 0.0;
            hi = stop;
            j += 1;
        }
        for v in &mut row[lo..hi] {
            *v = 0.0;
        }
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.rows[j].first().copied().unwrap_or(0.0)
    }

    /// Solves `RᵀR x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.rows.len();
        // Rᵀ y = b
        for j in 0..n {
            let rj = &self.rows[j];
            let v = b[j] / rj[0];
            b[j] = v;
            for (k, r) in rj.iter().enumerate().skip(1) {
                b[j + k] -= r * v;
            }
        }
        // R x = y
        for j in (0..n).rev() {
            let rj = &self.rows[j];
            let mut v = b[j];
            for (k, r) in rj.iter().enumerate().skip(1) {
                v -= r * b[j + k];
            }
            b[j] = v / rj[0];
        }
    }
}

/// Householder QR of the row-major `n×p` matrix `a` (`p ≤ n`). Returns the
/// full orthogonal `Q` (row-major `n×n`) and the upper `p×p` factor `R`,
/// with `a = Q[:, ..p] R`. Diagonal entries of `R` below `1e-13·max` are
/// raised to that size so rank-deficient inputs still give a usable factor.
pub(crate) fn householder(a: &[f64], n: usize, p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut w = a.to_vec();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let mut v = vec![0.0; n];
    for k in 0..p {
        let nrm = sqrt((k..n).map(|i| w[i * p + k] * w[i * p + k]).sum());
        if nrm == 0.0 {
            continue;
        }
        let alpha = if w[k * p + k] > 0.0 { -nrm } else { nrm };
        for i in 0..n {
            v[i] = if i < k { 0.0 } else { w[i * p + k] };
        }
        v[k] -= alpha;
        let vv: f64 = (k..n).map(|i| v[i] * v[i]).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..p {
            let f = 2.0 * (k..n).map(|i| v[i] * w[i * p + j]).sum::<f64>() / vv;
            for i in k..n {
                w[i * p + j] -= f * v[i];
            }
        }
        // Q ← Q H
        for r in 0..n {
            let f = 2.0 * (k..n).map(|i| q[r * n + i] * v[i]).sum::<f64>() / vv;
            for i in k..n {
                q[r * n + i] -= f * v[i];
            }
        }
    }
    let mut r = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            r[i * p + j] = w[i * p + j];
        }
    }
    let mx = (0..p).map(|j| r[j * p + j].abs()).fold(0.0_f64, f64::max);
    let floor = 1e-13 * mx.max(1e-300);
    for j in 0..p {
        if r[j * p + j].abs() < floor {
            r[j * p + j] = if r[j * p + j] < 0.0 { -floor } else { floor };
        }
    }
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn givens_matches_normal_equations() {
        let b = [[1.0, 2.0, 0.0], [0.0, -1.0, 3.0], [4.0, 0.0, 1.0], [0.5, 0.5, 0.5], [0.0, 0.0, 2.0]];
        let mut qr = GivensQr::new(3);
        for r in &b {
            let mut row = r.to_vec();
            qr.add_row(&mut row, 0, 3);
            assert!(row.iter().all(|&v| v == 0.0));
        }
        let mut m = [0.0; 9];
        for r in &b {
            for i in 0..3 {
                for j in 0..3 {
                    m[i * 3 + j] += r[i] * r[j];
                }
            }
        }
        let x = [0.3, -1.0, 2.0];
        let mut rhs: Vec<f64> = (0..3).map(|i| (0..3).map(|j| m[i * 3 + j] * x[j]).sum()).collect();
        qr.solve(&mut rhs);
        for (u, v) in rhs.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12, "{rhs:?}");
        }
        assert!((0..3).all(|j| qr.diag(j) > 0.0));
    }

    #[test]
    fn householder_reconstructs() {
        let (n, p) = (4, 2);
        let a = [1.0, 2.0, 0.0, 1.0, 3.0, -1.0, 1.0, 1.0];
        let (q, r) = householder(&a, n, p);
        for i in 0..n {
            for j in 0..p {
                let v: f64 = (0..p).map(|k| q[i * n + k] * r[k * p + j]).sum();
                assert!((v - a[i * p + j]).abs() < 1e-12);
            }
            for j in 0..n {
                let g: f64 = (0..n).map(|k| q[k * n + i] * q[k * n + j]).sum();
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sparse_products() {
        let r = Rows::new(3, vec![vec![(0, 1.0), (2, 2.0)], vec![(1, -1.0)]]);
        assert_eq!(r.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, -2.0]);
        assert_eq!(r.tmul_vec(&[1.0, 2.0]), vec![1.0, -2.0, 2.0]);
    }
}
