//! Small dense linear algebra: row-major matrices, a symmetric tridiagonal
//! eigensolver, Householder QR and a one-sided Jacobi SVD.
//!
//! Everything here is generic over [`Real`], so the same code paths serve
//! `f32` and `f64` callers.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `selfᵀ * y`.
    pub fn tmatvec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Mat<T>) -> Result<Mat<T>> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|x| **x != T::zero()).count()
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    // Scaled to avoid overflow for large entries.
    let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let s: T = a.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.
///
/// `diag` has length n, `off` has length n-1 (`off[i]` couples i and i+1).
/// Returns eigenvalues in ascending order and the eigenvectors as the
/// columns of an n×n matrix.
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T]) -> Result<(Vec<T>, Mat<T>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, got: off.len() });
    }
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..n - 1].copy_from_slice(off);
    let mut v = Mat::<T>::identity(n);
    let two = T::lit(2.0);
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 100 {
                    return Err(Error::NoConvergence(format!(
                        "tridiagonal QL stalled at row {l} of {n}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[(k, i + 1)];
                        let vk = v[(k, i)];
                        v[(k, i + 1)] = s * vk + c * vk1;
                        v[(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| d[i]).collect();
    let vecs = Mat::from_fn(n, n, |k, j| v[(k, order[j])]);
    Ok((vals, vecs))
}

/// Solves `(T - shift I) x = rhs` for symmetric tridiagonal `T` by Gaussian
/// elimination with partial pivoting. Exactly singular pivots are nudged to
/// a tiny value, which is the behaviour inverse iteration wants.
pub fn tridiagonal_shifted_solve<T: Real>(diag: &[T], off: &[T], shift: T, rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    if n == 1 {
        let mut p = diag[0] - shift;
        if p == T::zero() {
            p = T::min_positive_value().sqrt();
        }
        return vec![rhs[0] / p];
    }
    // Banded LU with one extra super-diagonal for pivoting fill-in.
    let mut a = vec![T::zero(); n]; // sub
    let mut b: Vec<T> = diag.iter().map(|&x| x - shift).collect(); // main
    let mut c = vec![T::zero(); n]; // super
    let mut c2 = vec![T::zero(); n]; // second super (fill)
    a[1..].copy_from_slice(&off[..n - 1]);
    c[..n - 1].copy_from_slice(&off[..n - 1]);
    let mut x = rhs.to_vec();
    let tiny = T::epsilon() * diag.iter().fold(T::one(), |m, &v| m.max(v.abs()));
    for i in 0..n - 1 {
        if a[i + 1].abs() > b[i].abs() {
            // swap rows i and i+1
            std::mem::swap(&mut b[i], &mut a[i + 1]);
            std::mem::swap(&mut c[i], &mut b[i + 1]);
            std::mem::swap(&mut c2[i], &mut c[i + 1]);
            x.swap(i, i + 1);
        }
        if b[i] == T::zero() {
            b[i] = tiny;
        }
        let factor = a[i + 1] / b[i];
        b[i + 1] -= factor * c[i];
        c[i + 1] -= factor * c2[i];
        let xi = x[i];
        x[i + 1] -= factor * xi;
        a[i + 1] = T::zero();
    }
    if b[n - 1] == T::zero() {
        b[n - 1] = tiny;
    }
    x[n - 1] /= b[n - 1];
    x[n - 2] = (x[n - 2] - c[n - 2] * x[n - 1]) / b[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - c[i] * x[i + 1] - c2[i] * x[i + 2]) / b[i];
    }
    x
}

/// Thin SVD `A = U diag(s) Vᵀ` of an m×n matrix (m ≥ n), built from a
/// Householder QR followed by one-sided Jacobi on the triangular factor.
/// Singular values are sorted in decreasing order.
#[derive(Clone, Debug)]
pub struct QrSvd<T> {
    m: usize,
    n: usize,
    // Column-major Householder vectors below the diagonal (unit leading entry implied).
    house: Vec<T>,
    tau: Vec<T>,
    u_r: Mat<T>,
    s: Vec<T>,
    v: Mat<T>,
}

impl<T: Real> QrSvd<T> {
    pub fn new(a: &Mat<T>) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(Error::Underdetermined { m, n });
        }
        let mut col = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                col[j * m + i] = a[(i, j)];
            }
        }
        let mut tau = vec![T::zero(); n];
        let mut r = Mat::<T>::zeros(n, n);
        for j in 0..n {
            let (head, tail) = col.split_at_mut((j + 1) * m);
            let x = &mut head[j * m + j..(j + 1) * m];
            let norm = norm2(x);
            if norm == T::zero() {
                tau[j] = T::zero();
            } else {
                let x0 = x[0];
                let beta = if x0 >= T::zero() { -norm } else { norm };
                tau[j] = (beta - x0) / beta;
                let scale = T::one() / (x0 - beta);
                for xi in x.iter_mut().skip(1) {
                    *xi *= scale;
                }
                x[0] = beta;
                // Apply H = I - tau v vᵀ to the remaining columns.
                for k in 0..(n - j - 1) {
                    let ck = &mut tail[k * m + j..(k + 1) * m];
                    let mut w = ck[0];
                    for (c, &vi) in ck.iter().skip(1).zip(x.iter().skip(1)) {
                        w += *c * vi;
                    }
                    w *= tau[j];
                    ck[0] -= w;
                    for (c, &vi) in ck.iter_mut().skip(1).zip(x.iter().skip(1)) {
                        *c -= w * vi;
                    }
                }
            }
        }
        for j in 0..n {
            for i in 0..=j {
                r[(i, j)] = col[j * m + i];
            }
        }
        let (u_r, s, v) = jacobi_svd_square(r)?;
        Ok(QrSvd { m, n, house: col, tau, u_r, s, v })
    }

    pub fn singular_values(&self) -> &[T] {
        &self.s
    }

    pub fn sigma_max(&self) -> T {
        self.s.first().copied().unwrap_or(T::zero())
    }

    pub fn sigma_min(&self) -> T {
        self.s.last().copied().unwrap_or(T::zero())
    }

    pub fn right_singular_vectors(&self) -> &Mat<T> {
        &self.v
    }

    /// `Qᵀ b`, full length m.
    fn apply_qt(&self, b: &[T]) -> Vec<T> {
        let m = self.m;
        let mut y = b.to_vec();
        for j in 0..self.n {
            if self.tau[j] == T::zero() {
                continue;
            }
            let v = &self.house[j * m + j..(j + 1) * m];
            let mut w = y[j];
            for (yi, &vi) in y[j + 1..].iter().zip(v.iter().skip(1)) {
                w += *yi * vi;
            }
            w *= self.tau[j];
            y[j] -= w;
            for (yi, &vi) in y[j + 1..].iter_mut().zip(v.iter().skip(1)) {
                *yi -= w * vi;
            }
        }
        y
    }

    /// Least-squares solution of `A x ≈ b` through the SVD of R.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: b.len() });
        }
        let y = self.apply_qt(b);
        let y = &y[..self.n];
        let uty = self.u_r.tmatvec(y);
        let scaled: Vec<T> = uty
            .iter()
            .zip(&self.s)
            .map(|(&c, &s)| if s > T::zero() { c / s } else { T::zero() })
            .collect();
        Ok(self.v.matvec(&scaled))
    }
}

/// One-sided Jacobi SVD of a square matrix. Returns (U, s, V), s descending.
fn jacobi_svd_square<T: Real>(mut w: Mat<T>) -> Result<(Mat<T>, Vec<T>, Mat<T>)> {
    let n = w.cols();
    let mut v = Mat::<T>::identity(n);
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut converged = n < 2;
    for _sweep in 0..80 {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for i in 0..w.rows() {
                    let a = w[(i, p)];
                    let b = w[(i, q)];
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..w.rows() {
                    let a = w[(i, p)];
                    let b = w[(i, q)];
                    w[(i, p)] = c * a - s * b;
                    w[(i, q)] = s * a + c * b;
                }
                for i in 0..n {
                    let a = v[(i, p)];
                    let b = v[(i, q)];
                    v[(i, p)] = c * a - s * b;
                    v[(i, q)] = s * a + c * b;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence("one-sided Jacobi SVD".into()));
    }
    let sig: Vec<T> = (0..n).map(|j| norm2(&w.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sig[b].partial_cmp(&sig[a]).unwrap_or(std::cmp::Ordering::Equal));
    let rows = w.rows();
    let u = Mat::from_fn(rows, n, |i, j| {
        let k = order[j];
        if sig[k] > T::zero() {
            w[(i, k)] / sig[k]
        } else {
            T::zero()
        }
    });
    let vs = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    let s = order.iter().map(|&k| sig[k]).collect();
    Ok((u, s, vs))
}

/// Singular values of an arbitrary matrix, descending.
pub fn singular_values<T: Real>(a: &Mat<T>) -> Result<Vec<T>> {
    if a.rows() >= a.cols() {
        Ok(QrSvd::new(a)?.s)
    } else {
        Ok(QrSvd::new(&a.transpose())?.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_known_spectrum() {
        // Discrete Laplacian: eigenvalues 2 - 2cos(kπ/(n+1)).
        let n = 12;
        let d = vec![2.0f64; n];
        let e = vec![-1.0f64; n - 1];
        let (vals, vecs) = tridiagonal_eigen(&d, &e).unwrap();
        for (k, &lam) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 1e-13);
            let x = vecs.column(k);
            for i in 0..n {
                let mut tx = d[i] * x[i];
                if i > 0 {
                    tx += e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    tx += e[i] * x[i + 1];
                }
                assert!((tx - lam * x[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shifted_solve_inverts() {
        let d = [4.0f64, 5.0, 6.0, 7.0];
        let e = [1.0, -2.0, 0.5];
        let rhs = [1.0, 2.0, 3.0, 4.0];
        let x = tridiagonal_shifted_solve(&d, &e, 0.3, &rhs);
        for i in 0..4 {
            let mut r = (d[i] - 0.3) * x[i];
            if i > 0 {
                r += e[i - 1] * x[i - 1];
            }
            if i < 3 {
                r += e[i] * x[i + 1];
            }
            assert!((r - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn qr_svd_solves_overdetermined_system() {
        let a = Mat::from_fn(7, 3, |i, j| ((i + 1) as f64).powi(j as i32) / 10.0);
        let x_true = [0.3, -1.2, 2.0];
        let b = a.matvec(&x_true);
        let f = QrSvd::new(&a).unwrap();
        let x = f.solve(&b).unwrap();
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-10);
        }
        let s = f.singular_values();
        assert!(s[0] >= s[1] && s[1] >= s[2] && s[2] > 0.0);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let mut a = Mat::<f64>::zeros(4, 3);
        a[(0, 0)] = 3.0;
        a[(1, 1)] = -5.0;
        a[(2, 2)] = 0.5;
        let s = singular_values(&a).unwrap();
        assert!((s[0] - 5.0).abs() < 1e-14);
        assert!((s[1] - 3.0).abs() < 1e-14);
        assert!((s[2] - 0.5).abs() < 1e-14);
    }
}
