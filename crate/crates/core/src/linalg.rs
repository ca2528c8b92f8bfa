//! Dense linear-algebra kernels: row-major matrices, one-sided Jacobi SVD with
//! Frobenius-budget truncation, Householder QR, the implicit QL iteration for
//! symmetric tridiagonal matrices (Golub–Welsch input), a cyclic Jacobi
//! symmetric eigensolver and LU with partial pivoting.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{invalid, Result, SttError};

/// Dense row-major matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return invalid(format!(
                "matrix shape {rows}x{cols} does not match {} entries",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("ragged rows");
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self` with column `j` scaled by `s[j]`.
    pub fn scale_cols(&self, s: &[f64]) -> Matrix {
        assert_eq!(s.len(), self.cols);
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s[j])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// First `k` columns.
    pub fn leading_cols(&self, k: usize) -> Matrix {
        Matrix::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        Matrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin SVD `A = U diag(s) Vᵀ` with `U` m×k, `V` n×k.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
    /// Number of retained singular triplets.
    pub rank: usize,
    /// Frobenius norm of the discarded singular values.
    pub tail_norm: f64,
}

impl Svd {
    /// Keep the leading `r` triplets.
    pub fn truncate(mut self, r: usize) -> Svd {
        let r = r.min(self.s.len());
        self.tail_norm = tail_norm(&self.s, r);
        self.u = self.u.leading_cols(r);
        self.v = self.v.leading_cols(r);
        self.s.truncate(r);
        self.rank = r;
        self
    }

    /// `U diag(s) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.u.scale_cols(&self.s).matmul(&self.v.transpose())
    }
}

fn tail_norm(s: &[f64], keep: usize) -> f64 {
    s[keep.min(s.len())..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Smallest `k` with `sqrt(Σ_{i≥k} s_i²) ≤ delta` for descending `s`.
pub fn truncation_rank(s: &[f64], delta: f64) -> usize {
    let budget = delta * delta;
    let mut acc = 0.0;
    let mut k = s.len();
    while k > 0 {
        let next = acc + s[k - 1] * s[k - 1];
        if next > budget {
            break;
        }
        acc = next;
        k -= 1;
    }
    k
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// Full thin SVD by one-sided Jacobi. `k = min(m, n)` triplets, `s` descending,
/// columns belonging to zero singular values completed to an orthonormal set.
pub fn svd(a: &Matrix) -> Result<Svd> {
    if !a.is_finite() {
        return invalid("svd of a matrix with non-finite entries");
    }
    if a.rows() < a.cols() {
        let t = svd(&a.transpose())?;
        return Ok(Svd { u: t.v, s: t.s, v: t.u, rank: t.rank, tail_norm: 0.0 });
    }
    let (m, n) = (a.rows(), a.cols());
    // Rows of `w` are the columns of A; rotations keep them contiguous.
    let mut w = a.transpose();
    let mut v = Matrix::identity(n);
    // Orthogonality is judged at the accuracy a length-m dot product can
    // deliver, as LAPACK does.
    let tol = f64::EPSILON * (m as f64).sqrt();
    // Pairs whose coupling sits below roundoff of the whole matrix are left
    // alone; otherwise noise-level columns keep bouncing forever.
    let floor = tol * tol * a.as_slice().iter().map(|x| x * x).sum::<f64>();
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                {
                    let wp = w.row(p);
                    let wq = w.row(q);
                    for k in 0..m {
                        alpha += wp[k] * wp[k];
                        beta += wq[k] * wq[k];
                        gamma += wp[k] * wq[k];
                    }
                }
                if gamma.abs() <= floor || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut w, p, q, c, s);
                rotate_rows(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(SttError::NumericalFailure("Jacobi SVD did not converge".into()));
    }

    let norms: Vec<f64> = (0..n).map(|j| w.row(j).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = s.first().copied().unwrap_or(0.0);
    let mut u = Matrix::zeros(m, n);
    let mut vout = Matrix::zeros(n, n);
    let mut null_cols = Vec::new();
    for (jj, &j) in order.iter().enumerate() {
        let nj = norms[j];
        if nj > 0.0 && nj > smax * 1e-300 {
            for i in 0..m {
                u[(i, jj)] = w[(j, i)] / nj;
            }
        } else {
            null_cols.push(jj);
        }
        for i in 0..n {
            vout[(i, jj)] = v[(j, i)];
        }
    }
    complete_orthonormal(&mut u, &null_cols);
    Ok(Svd { u, s, v: vout, rank: n, tail_norm: 0.0 })
}

fn rotate_rows(w: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = w.cols();
    let (lo, hi) = w.data.split_at_mut(q * cols);
    let wp = &mut lo[p * cols..(p + 1) * cols];
    let wq = &mut hi[..cols];
    for k in 0..cols {
        let a = wp[k];
        let b = wq[k];
        wp[k] = c * a - s * b;
        wq[k] = s * a + c * b;
    }
}

/// Fill the listed columns of `u` so that all columns are orthonormal.
fn complete_orthonormal(u: &mut Matrix, cols: &[usize]) {
    let m = u.rows();
    let mut filled: Vec<usize> = (0..u.cols()).filter(|j| !cols.contains(j)).collect();
    let mut e = 0;
    for &j in cols {
        loop {
            assert!(e < m, "cannot complete orthonormal basis");
            let mut x = vec![0.0; m];
            x[e] = 1.0;
            e += 1;
            for _ in 0..2 {
                for &f in &filled {
                    let dot: f64 = (0..m).map(|i| u[(i, f)] * x[i]).sum();
                    for (i, xi) in x.iter_mut().enumerate() {
                        *xi -= dot * u[(i, f)];
                    }
                }
            }
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nrm > 1e-8 {
                for i in 0..m {
                    u[(i, j)] = x[i] / nrm;
                }
                filled.push(j);
                break;
            }
        }
    }
}

/// All singular values of `a`, descending.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.s)
}

/// SVD truncated to the smallest rank whose discarded singular values have
/// Frobenius norm at most `delta`. `delta = 0` selects the numerical rank at
/// `1e-14·‖A‖_F`.
pub fn truncated_svd(a: &Matrix, delta: f64) -> Result<Svd> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return invalid(format!("truncation tolerance must be finite and nonnegative, got {delta}"));
    }
    let full = svd(a)?;
    let delta = if delta == 0.0 { 1e-14 * a.frobenius_norm() } else { delta };
    let r = truncation_rank(&full.s, delta);
    Ok(full.truncate(r))
}

/// Thin Householder QR, `A = Q R` with `Q` m×n orthonormal and `R` n×n upper
/// triangular. Requires `rows ≥ cols`.
pub fn qr_thin(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return invalid(format!("qr_thin needs rows >= cols, got {m}x{n}"));
    }
    if !a.is_finite() {
        return invalid("qr of a matrix with non-finite entries");
    }
    let mut r = a.clone();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        let alpha = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha == 0.0 {
            vs.push(Vec::new());
            continue;
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= vn);
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
            for i in k..m {
                r[(i, j)] -= 2.0 * v[i - k] * dot;
            }
        }
        vs.push(v);
    }
    let mut q = Matrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for k in (0..n).rev() {
        let v = &vs[k];
        if v.is_empty() {
            continue;
        }
        for j in 0..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * q[(i, j)]).sum();
            for i in k..m {
                q[(i, j)] -= 2.0 * v[i - k] * dot;
            }
        }
    }
    let r = Matrix::from_fn(n, n, |i, j| if j >= i { r[(i, j)] } else { 0.0 });
    Ok((q, r))
}

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal, together with the first component of each
/// normalized eigenvector.
pub fn symtridiag_eig(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 || offdiag.len() + 1 != n {
        return invalid(format!(
            "tridiagonal sizes: diag {} offdiag {}",
            diag.len(),
            offdiag.len()
        ));
    }
    if diag.iter().chain(offdiag).any(|x| !x.is_finite()) {
        return invalid("non-finite tridiagonal entries");
    }
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(SttError::NumericalFailure("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    Ok((order.iter().map(|&i| d[i]).collect(), order.iter().map(|&i| z[i]).collect()))
}

/// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues ascending; eigenvectors are the columns of the returned matrix.
pub fn sym_eig(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return invalid("sym_eig needs a square matrix");
    }
    if !a.is_finite() {
        return invalid("sym_eig of a matrix with non-finite entries");
    }
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut done = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if done {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            done = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !done {
        return Err(SttError::NumericalFailure("Jacobi eigensolver did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = v.select_cols(&order);
    Ok((vals, vecs))
}

/// LU factorization with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Lu> {
        let n = a.rows();
        if a.cols() != n {
            return invalid("LU needs a square matrix");
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(pmax > scale * n as f64 * f64::EPSILON) {
                return Err(SttError::NumericalFailure(format!(
                    "singular matrix (pivot {pmax:e} at column {k})"
                )));
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn determinant(&self) -> f64 {
        (0..self.lu.rows()).map(|i| self.lu[(i, i)]).product::<f64>() * self.sign
    }

    /// Solve `A x = b` for every column of `b`.
    pub fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.lu.rows();
        assert_eq!(b.rows(), n);
        let mut x = b.select_rows(&self.perm);
        for j in 0..b.cols() {
            for i in 0..n {
                let mut acc = x[(i, j)];
                for k in 0..i {
                    acc -= self.lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = x[(i, j)];
                for k in (i + 1)..n {
                    acc -= self.lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = acc / self.lu[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> Matrix {
        self.solve(&Matrix::identity(self.lu.rows()))
    }
}

/// Determinant of a square matrix; zero when numerically singular.
pub fn determinant(a: &Matrix) -> f64 {
    Lu::new(a).map(|lu| lu.determinant()).unwrap_or(0.0)
}

/// `B A⁻¹` for square nonsingular `A`, computed as `(A⁻ᵀ Bᵀ)ᵀ`.
pub fn right_solve(b: &Matrix, a: &Matrix) -> Result<Matrix> {
    let lu = Lu::new(&a.transpose())?;
    Ok(lu.solve(&b.transpose()).transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn orthonormality_defect(q: &Matrix) -> f64 {
        q.transpose().matmul(q).sub(&Matrix::identity(q.cols())).max_abs()
    }

    #[test]
    fn diagonal_truncation() {
        let a = Matrix::diag(&[3.0, 2.0, 1.0]);
        let t = truncated_svd(&a, 1.5).unwrap();
        assert_eq!(t.rank, 2);
        assert!((t.s[0] - 3.0).abs() < 1e-14 && (t.s[1] - 2.0).abs() < 1e-14);
        let resid = a.sub(&t.reconstruct()).frobenius_norm();
        assert!((resid - 1.0).abs() < 1e-13);
    }

    #[test]
    fn outer_product_is_rank_one() {
        let u = [1.0, -2.0, 0.5, 3.0];
        let v = [0.3, 4.0, -1.0];
        let a = Matrix::from_fn(4, 3, |i, j| u[i] * v[j]);
        assert_eq!(truncated_svd(&a, 0.0).unwrap().rank, 1);
    }

    #[test]
    fn svd_wide_and_tall_reconstruct() {
        for (m, n) in [(6, 4), (4, 6), (1, 5), (5, 1), (7, 7)] {
            let a = random(m, n, (m * 10 + n) as u64);
            let s = svd(&a).unwrap();
            assert!(a.sub(&s.reconstruct()).frobenius_norm() < 1e-13);
            assert!(orthonormality_defect(&s.u) < 1e-13);
            assert!(orthonormality_defect(&s.v) < 1e-13);
            assert!(s.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn zero_matrix_gets_orthonormal_factors() {
        let a = Matrix::zeros(4, 3);
        let s = svd(&a).unwrap();
        assert!(orthonormality_defect(&s.u) < 1e-14);
        assert_eq!(truncated_svd(&a, 0.0).unwrap().rank, 0);
    }

    #[test]
    fn svd_rejects_nan() {
        let mut a = Matrix::identity(2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&a), Err(SttError::InvalidInput(_))));
        assert!(truncated_svd(&Matrix::identity(2), -1.0).is_err());
    }

    #[test]
    fn qr_examples() {
        let (q, r) = qr_thin(&Matrix::identity(3)).unwrap();
        assert!(q.sub(&Matrix::identity(3)).max_abs() < 1e-15 || q.matmul(&r).sub(&Matrix::identity(3)).max_abs() < 1e-15);
        assert!(r.max_abs() - 1.0 < 1e-15);
        let (_, r) = qr_thin(&Matrix::from_vec(2, 1, vec![3.0, 4.0]).unwrap()).unwrap();
        assert!((r[(0, 0)].abs() - 5.0).abs() < 1e-14);
        let a = random(8, 3, 7);
        let (q, r) = qr_thin(&a).unwrap();
        assert!(orthonormality_defect(&q) < 1e-12);
        assert!(q.matmul(&r).sub(&a).frobenius_norm() < 1e-12 * a.frobenius_norm());
        for i in 0..3 {
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
        assert!(qr_thin(&random(2, 3, 1)).is_err());
    }

    #[test]
    fn tridiagonal_small_cases() {
        let (l, z) = symtridiag_eig(&[2.5], &[]).unwrap();
        assert_eq!(l, vec![2.5]);
        assert_eq!(z, vec![1.0]);
        let (l, z) = symtridiag_eig(&[0.0, 0.0], &[1.0]).unwrap();
        assert!((l[0] + 1.0).abs() < 1e-15 && (l[1] - 1.0).abs() < 1e-15);
        for c in z {
            assert!((c.abs() - 0.5f64.sqrt()).abs() < 1e-15);
        }
        assert!(symtridiag_eig(&[1.0, 2.0], &[]).is_err());
    }

    #[test]
    fn sym_eig_reconstructs() {
        let b = random(6, 6, 3);
        let a = b.matmul(&b.transpose());
        let (vals, vecs) = sym_eig(&a).unwrap();
        let rec = vecs.scale_cols(&vals).matmul(&vecs.transpose());
        assert!(rec.sub(&a).max_abs() < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lu_solve_and_det() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let lu = Lu::new(&a).unwrap();
        assert!((lu.determinant() - 5.0).abs() < 1e-14);
        assert!(a.matmul(&lu.inverse()).sub(&Matrix::identity(2)).max_abs() < 1e-15);
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(Lu::new(&sing).is_err());
        assert_eq!(determinant(&sing), 0.0);
    }
}
