//! Discrete tensor trains.
//!
//! Layout convention, used everywhere in the crate: dense tensors are stored
//! row-major (last index fastest), so the k-th unfolding groups the first `k`
//! axes into rows with `i_1` slowest. A core `G_k` of shape `r_{k-1} × n_k × r_k`
//! stores `(α, i, β)` at `(α·n_k + i)·r_k + β`; its left unfolding
//! `(α, i) × β` and right unfolding `α × (i, β)` are both plain reshapes.
//! Quantics digits are most-significant first, matching the same reshape.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SttError};
use crate::linalg::{qr_thin, svd, truncated_svd, truncation_rank, Matrix};

/// Default cap on the number of entries [`tt_full`] may materialize.
pub const DEFAULT_FULL_CAP: usize = 10_000_000;

/// Dense tensor in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return invalid("dense tensor shape does not match data length");
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let total: usize = shape.iter().product();
        let mut data = Vec::with_capacity(total);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..total {
            data.push(f(&idx));
            increment(&mut idx, shape);
        }
        Self { shape: shape.to_vec(), data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &DenseTensor) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// The k-th unfolding: rows index `(i_1..i_k)`, columns the rest.
    pub fn unfolding(&self, k: usize) -> Matrix {
        let rows: usize = self.shape[..k].iter().product();
        let cols = self.data.len() / rows.max(1);
        Matrix::from_vec(rows, cols, self.data.clone()).expect("consistent unfolding")
    }
}

/// Odometer increment of a row-major multi-index.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// One three-way TT core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Core {
    pub rl: usize,
    pub n: usize,
    pub rr: usize,
    pub data: Vec<f64>,
}

impl Core {
    pub fn new(rl: usize, n: usize, rr: usize, data: Vec<f64>) -> Result<Self> {
        if rl * n * rr != data.len() || rl == 0 || n == 0 || rr == 0 {
            return invalid(format!("core shape {rl}x{n}x{rr} vs {} entries", data.len()));
        }
        Ok(Self { rl, n, rr, data })
    }

    pub fn zeros(rl: usize, n: usize, rr: usize) -> Self {
        Self { rl, n, rr, data: vec![0.0; rl * n * rr] }
    }

    #[inline]
    pub fn at(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[(a * self.n + i) * self.rr + b]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, i: usize, b: usize) -> &mut f64 {
        &mut self.data[(a * self.n + i) * self.rr + b]
    }

    /// `(α, i) × β` matrix.
    pub fn left_unfolding(&self) -> Matrix {
        Matrix::from_vec(self.rl * self.n, self.rr, self.data.clone()).unwrap()
    }

    /// `α × (i, β)` matrix.
    pub fn right_unfolding(&self) -> Matrix {
        Matrix::from_vec(self.rl, self.n * self.rr, self.data.clone()).unwrap()
    }

    pub fn from_left_unfolding(m: Matrix, rl: usize, n: usize) -> Self {
        let rr = m.cols();
        assert_eq!(m.rows(), rl * n);
        Self { rl, n, rr, data: m.into_vec() }
    }

    pub fn from_right_unfolding(m: Matrix, n: usize) -> Self {
        let rl = m.rows();
        let rr = m.cols() / n;
        assert_eq!(m.cols(), n * rr);
        Self { rl, n, rr, data: m.into_vec() }
    }

    /// Slice `G(:, i, :)` as an `rl × rr` matrix.
    pub fn slice(&self, i: usize) -> Matrix {
        Matrix::from_fn(self.rl, self.rr, |a, b| self.at(a, i, b))
    }

    /// Replace the mode index by applying `m` (rows = new mode entries,
    /// columns = old ones): `G'(α, j, β) = Σ_i m(j, i) G(α, i, β)`.
    pub fn apply_mode_matrix(&self, m: &Matrix) -> Core {
        assert_eq!(m.cols(), self.n);
        let nn = m.rows();
        let mut out = Core::zeros(self.rl, nn, self.rr);
        for a in 0..self.rl {
            for j in 0..nn {
                let dst = (a * nn + j) * self.rr;
                for i in 0..self.n {
                    let c = m[(j, i)];
                    if c == 0.0 {
                        continue;
                    }
                    let src = (a * self.n + i) * self.rr;
                    for b in 0..self.rr {
                        out.data[dst + b] += c * self.data[src + b];
                    }
                }
            }
        }
        out
    }

    /// `v ← v · G(:, i, :)` for a row vector `v` of length `rl`.
    #[inline]
    pub fn vec_mul(&self, v: &[f64], i: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.rr, 0.0);
        for (a, &va) in v.iter().enumerate() {
            if va == 0.0 {
                continue;
            }
            let base = (a * self.n + i) * self.rr;
            for b in 0..self.rr {
                out[b] += va * self.data[base + b];
            }
        }
    }
}

/// Tensor train `A(i_1..i_d) = G_1(i_1)···G_d(i_d)` with boundary ranks one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTTensor {
    cores: Vec<Core>,
}

impl TTTensor {
    pub fn new(cores: Vec<Core>) -> Result<Self> {
        if cores.is_empty() {
            return invalid("a tensor train needs at least one core");
        }
        if cores[0].rl != 1 || cores[cores.len() - 1].rr != 1 {
            return invalid("boundary ranks must be one");
        }
        for w in cores.windows(2) {
            if w[0].rr != w[1].rl {
                return invalid(format!("adjacent ranks disagree: {} vs {}", w[0].rr, w[1].rl));
            }
        }
        if cores.iter().any(|c| c.data.iter().any(|x| !x.is_finite())) {
            return invalid("non-finite core entries");
        }
        Ok(Self { cores })
    }

    /// Rank-one tensor from per-mode vectors.
    pub fn rank_one(vectors: &[Vec<f64>]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| Core::new(1, v.len(), 1, v.clone())).collect::<Result<_>>()?)
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<Core> {
        self.cores
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.n).collect()
    }

    /// `(r_0, …, r_d)`.
    pub fn ranks(&self) -> Vec<usize> {
        std::iter::once(1).chain(self.cores.iter().map(|c| c.rr)).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Number of stored parameters, `Σ r_{k-1} n_k r_k`.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }

    pub fn scale(&mut self, s: f64) {
        self.cores[0].data.iter_mut().for_each(|x| *x *= s);
    }
}

/// Sequential truncated SVDs of the unfoldings with per-step budget
/// `eps·‖A‖_F/√(d-1)`.
pub fn tt_svd(full: &DenseTensor, eps: f64) -> Result<TTTensor> {
    if full.data.is_empty() || full.shape.is_empty() {
        return invalid("empty tensor");
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return invalid(format!("eps must be finite and nonnegative, got {eps}"));
    }
    if full.data.iter().any(|x| !x.is_finite()) {
        return invalid("non-finite tensor entries");
    }
    let d = full.shape.len();
    if d == 1 {
        return TTTensor::new(vec![Core::new(1, full.shape[0], 1, full.data.clone())?]);
    }
    let delta = eps * full.frobenius_norm() / ((d - 1) as f64).sqrt();
    let mut cores = Vec::with_capacity(d);
    let mut rest = Matrix::from_vec(1, full.data.len(), full.data.clone())?;
    let mut r_prev = 1;
    for k in 0..d - 1 {
        let n = full.shape[k];
        let cols = rest.as_slice().len() / (r_prev * n);
        let c = Matrix::from_vec(r_prev * n, cols, rest.into_vec())?;
        let t = truncated_svd(&c, delta)?;
        let r = t.rank.max(1);
        let t = if r == t.rank { t } else { svd(&c)?.truncate(r) };
        cores.push(Core::from_left_unfolding(t.u.clone(), r_prev, n));
        rest = Matrix::diag(&t.s).matmul(&t.v.transpose());
        r_prev = r;
    }
    let n = full.shape[d - 1];
    cores.push(Core::new(r_prev, n, 1, rest.into_vec())?);
    TTTensor::new(cores)
}

/// Entry of a tensor train by left-to-right vector–matrix products.
pub fn tt_eval(t: &TTTensor, idx: &[usize]) -> Result<f64> {
    if idx.len() != t.ndim() {
        return invalid(format!("index has {} entries for a {}-way tensor", idx.len(), t.ndim()));
    }
    for (k, (&i, c)) in idx.iter().zip(t.cores()).enumerate() {
        if i >= c.n {
            return invalid(format!("index {i} out of range {} on mode {k}", c.n));
        }
    }
    Ok(eval_unchecked(t, idx))
}

pub(crate) fn eval_unchecked(t: &TTTensor, idx: &[usize]) -> f64 {
    let mut v = vec![1.0];
    let mut next = Vec::new();
    for (c, &i) in t.cores().iter().zip(idx) {
        c.vec_mul(&v, i, &mut next);
        std::mem::swap(&mut v, &mut next);
    }
    v[0]
}

/// Dense reconstruction, refused above `cap` entries.
pub fn tt_full(t: &TTTensor, cap: usize) -> Result<DenseTensor> {
    let shape = t.shape();
    let total = shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
    match total {
        Some(n) if n <= cap => {}
        _ => return Err(SttError::Resource(format!("dense size of {shape:?} exceeds cap {cap}"))),
    }
    // Left-to-right contraction: rows (i_1..i_k), columns r_k.
    let mut acc = Matrix::identity(1);
    for c in t.cores() {
        let rows = acc.rows();
        let mut next = Matrix::zeros(rows * c.n, c.rr);
        for p in 0..rows {
            for i in 0..c.n {
                let dst = next.row_mut(p * c.n + i);
                for (a, &x) in acc.row(p).iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for (b, d) in dst.iter_mut().enumerate() {
                        *d += x * c.at(a, i, b);
                    }
                }
            }
        }
        acc = next;
    }
    DenseTensor::new(shape, acc.into_vec())
}

/// Frobenius norm by Gram-matrix accumulation over the cores.
pub fn tt_norm_f(t: &TTTensor) -> f64 {
    let mut g = vec![1.0];
    for c in t.cores() {
        let mut next = vec![0.0; c.rr * c.rr];
        for a in 0..c.rl {
            for a2 in 0..c.rl {
                let gaa = g[a * c.rl + a2];
                if gaa == 0.0 {
                    continue;
                }
                for i in 0..c.n {
                    for b in 0..c.rr {
                        let x = gaa * c.at(a, i, b);
                        for b2 in 0..c.rr {
                            next[b * c.rr + b2] += x * c.at(a2, i, b2);
                        }
                    }
                }
            }
        }
        g = next;
    }
    g[0].max(0.0).sqrt()
}

/// Make cores `1..d` right-orthonormal, pushing the non-orthogonal factor into
/// core 0.
pub(crate) fn right_orthogonalize(cores: &mut [Core]) -> Result<()> {
    for k in (1..cores.len()).rev() {
        let m = cores[k].right_unfolding();
        let n = cores[k].n;
        // m = L Q with Q row-orthonormal.
        let (l, q) = if m.cols() >= m.rows() {
            let (q, r) = qr_thin(&m.transpose())?;
            (r.transpose(), q.transpose())
        } else {
            let s = svd(&m)?;
            (s.u.scale_cols(&s.s), s.v.transpose())
        };
        cores[k] = Core::from_right_unfolding(q, n);
        let prev = &cores[k - 1];
        let merged = prev.left_unfolding().matmul(&l);
        cores[k - 1] = Core::from_left_unfolding(merged, prev.rl, prev.n);
    }
    Ok(())
}

/// Recompression to relative accuracy `eps`: right-to-left orthogonalization
/// followed by left-to-right truncated SVDs with budget `eps·‖t‖_F/√(d-1)`.
pub fn tt_round(t: &TTTensor, eps: f64) -> Result<TTTensor> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return invalid(format!("eps must be finite and nonnegative, got {eps}"));
    }
    let d = t.ndim();
    if d == 1 {
        return Ok(t.clone());
    }
    let mut cores = t.cores().to_vec();
    right_orthogonalize(&mut cores)?;
    let norm = cores[0].left_unfolding().frobenius_norm();
    let delta = if eps == 0.0 { 1e-14 * norm } else { eps * norm / ((d - 1) as f64).sqrt() };
    for k in 0..d - 1 {
        let c = &cores[k];
        let (rl, n) = (c.rl, c.n);
        let full = svd(&c.left_unfolding())?;
        let r = truncation_rank(&full.s, delta).max(1);
        let s = full.truncate(r);
        cores[k] = Core::from_left_unfolding(s.u.clone(), rl, n);
        let carry = Matrix::diag(&s.s).matmul(&s.v.transpose());
        let next = &cores[k + 1];
        let merged = carry.matmul(&next.right_unfolding());
        cores[k + 1] = Core::from_right_unfolding(merged, next.n);
    }
    TTTensor::new(cores)
}

/// Index folding of each mode of size `base^m` into `m` modes of size `base`.
/// A mode of size one folds to a single mode of size one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuanticsMap {
    base: usize,
    physical_shape: Vec<usize>,
    digits: Vec<usize>,
}

/// Fold `shape` with the given base; every size must be a power of `base`.
pub fn quantics_fold(shape: &[usize], base: usize) -> Result<QuanticsMap> {
    if base < 2 {
        return Err(SttError::Configuration(format!("quantics base must be >= 2, got {base}")));
    }
    if shape.is_empty() {
        return invalid("empty shape");
    }
    let mut digits = Vec::with_capacity(shape.len());
    for &n in shape {
        if n == 0 {
            return invalid("zero-sized mode");
        }
        let mut m = 0;
        let mut p = 1usize;
        while p < n {
            p = p.checked_mul(base).ok_or_else(|| SttError::Configuration("mode too large".into()))?;
            m += 1;
        }
        if p != n {
            return Err(SttError::Configuration(format!("mode size {n} is not a power of {base}")));
        }
        digits.push(m);
    }
    Ok(QuanticsMap { base, physical_shape: shape.to_vec(), digits })
}

impl QuanticsMap {
    pub fn base(&self) -> usize {
        self.base
    }

    pub fn physical_shape(&self) -> &[usize] {
        &self.physical_shape
    }

    /// Number of folded modes belonging to each physical axis.
    pub fn modes_per_axis(&self) -> Vec<usize> {
        self.digits.iter().map(|&m| m.max(1)).collect()
    }

    pub fn folded_shape(&self) -> Vec<usize> {
        self.digits
            .iter()
            .flat_map(|&m| if m == 0 { vec![1] } else { vec![self.base; m] })
            .collect()
    }

    pub fn fold_index(&self, idx: &[usize]) -> Result<Vec<usize>> {
        if idx.len() != self.physical_shape.len() {
            return invalid("index length does not match physical shape");
        }
        let mut out = Vec::with_capacity(self.digits.iter().map(|&m| m.max(1)).sum());
        for ((&i, &n), &m) in idx.iter().zip(&self.physical_shape).zip(&self.digits) {
            if i >= n {
                return invalid(format!("index {i} out of range {n}"));
            }
            if m == 0 {
                out.push(0);
                continue;
            }
            let start = out.len();
            out.resize(start + m, 0);
            let mut v = i;
            for j in (0..m).rev() {
                out[start + j] = v % self.base;
                v /= self.base;
            }
        }
        Ok(out)
    }

    pub fn unfold_index(&self, folded: &[usize]) -> Result<Vec<usize>> {
        if folded.len() != self.modes_per_axis().iter().sum::<usize>() {
            return invalid("folded index length mismatch");
        }
        if folded.iter().any(|&b| b >= self.base) {
            return invalid("folded digit out of range");
        }
        Ok(self.unfold_unchecked(folded))
    }

    pub(crate) fn unfold_unchecked(&self, folded: &[usize]) -> Vec<usize> {
        let mut pos = 0;
        self.digits
            .iter()
            .map(|&m| {
                let take = m.max(1);
                let v = folded[pos..pos + take].iter().fold(0, |acc, &b| acc * self.base + b);
                pos += take;
                v
            })
            .collect()
    }

    /// Contract the folded cores of each axis into one physical core.
    pub fn merge(&self, folded: &TTTensor) -> Result<TTTensor> {
        if folded.shape() != self.folded_shape() {
            return invalid("folded tensor shape does not match the map");
        }
        let mut cores = Vec::with_capacity(self.physical_shape.len());
        let mut it = folded.cores().iter();
        for &m in &self.modes_per_axis() {
            let mut acc = it.next().unwrap().clone();
            for _ in 1..m {
                let c = it.next().unwrap();
                let mut merged = Core::zeros(acc.rl, acc.n * c.n, c.rr);
                for a in 0..acc.rl {
                    for i in 0..acc.n {
                        for g in 0..acc.rr {
                            let x = acc.at(a, i, g);
                            if x == 0.0 {
                                continue;
                            }
                            for j in 0..c.n {
                                for b in 0..c.rr {
                                    *merged.at_mut(a, i * c.n + j, b) += x * c.at(g, j, b);
                                }
                            }
                        }
                    }
                }
                acc = merged;
            }
            cores.push(acc);
        }
        TTTensor::new(cores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_outer_product() {
        let (u, v, w) = ([1.0, 2.0], [3.0, -1.0, 0.5], [2.0, 4.0]);
        let a = DenseTensor::from_fn(&[2, 3, 2], |i| u[i[0]] * v[i[1]] * w[i[2]]);
        let t = tt_svd(&a, 1e-12).unwrap();
        assert_eq!(t.ranks(), vec![1, 1, 1, 1]);
        assert!(tt_full(&t, DEFAULT_FULL_CAP).unwrap().distance(&a) < 1e-13);
    }

    #[test]
    fn ones_and_lookup() {
        let t = TTTensor::rank_one(&[vec![1.0; 3], vec![1.0; 2]]).unwrap();
        assert_eq!(tt_eval(&t, &[2, 1]).unwrap(), 1.0);
        let t = TTTensor::rank_one(&[vec![0.5, 7.0, -2.0]]).unwrap();
        assert_eq!(tt_eval(&t, &[1]).unwrap(), 7.0);
        assert!(tt_eval(&t, &[3]).is_err());
        assert!(tt_eval(&t, &[0, 0]).is_err());
    }

    #[test]
    fn two_core_contraction_is_matrix_product() {
        let a = Core::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Core::new(2, 3, 1, vec![1.0, 0.0, -1.0, 2.0, 1.0, 0.5]).unwrap();
        let t = TTTensor::new(vec![a.clone(), b.clone()]).unwrap();
        let full = tt_full(&t, 100).unwrap();
        let prod = a.left_unfolding().transpose().transpose().matmul(&b.right_unfolding());
        assert_eq!(full.data(), prod.as_slice());
    }

    #[test]
    fn norm_examples() {
        let t = TTTensor::rank_one(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((tt_norm_f(&t) - 2.0).abs() < 1e-15);
        let t = TTTensor::rank_one(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(tt_norm_f(&t), 1.0);
    }

    #[test]
    fn full_cap() {
        let t = TTTensor::rank_one(&[vec![1.0; 10], vec![1.0; 10]]).unwrap();
        assert!(matches!(tt_full(&t, 99), Err(SttError::Resource(_))));
    }

    #[test]
    fn invalid_trains() {
        assert!(TTTensor::new(vec![]).is_err());
        assert!(TTTensor::new(vec![Core::zeros(2, 2, 1)]).is_err());
        assert!(TTTensor::new(vec![Core::zeros(1, 2, 2), Core::zeros(3, 2, 1)]).is_err());
        assert!(tt_svd(&DenseTensor::new(vec![0], vec![]).unwrap(), 0.1).is_err());
    }

    #[test]
    fn zero_padding_rounds_away() {
        let a = Core::new(1, 2, 3, vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0]).unwrap();
        let b = Core::new(3, 2, 1, vec![3.0, 4.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let t = TTTensor::new(vec![a, b]).unwrap();
        let r = tt_round(&t, 1e-12).unwrap();
        assert_eq!(r.ranks(), vec![1, 1, 1]);
        let diff = tt_full(&t, 100).unwrap().distance(&tt_full(&r, 100).unwrap());
        assert!(diff < 1e-14);
    }

    #[test]
    fn quantics_examples() {
        let q = quantics_fold(&[8], 2).unwrap();
        assert_eq!(q.folded_shape(), vec![2, 2, 2]);
        assert_eq!(q.fold_index(&[5]).unwrap(), vec![1, 0, 1]);
        assert_eq!(q.fold_index(&[6]).unwrap(), vec![1, 1, 0]);
        assert_eq!(q.unfold_index(&[0, 1, 1]).unwrap(), vec![3]);
        let q = quantics_fold(&[4, 4], 2).unwrap();
        assert_eq!(q.folded_shape(), vec![2, 2, 2, 2]);
        let q = quantics_fold(&[1, 4], 2).unwrap();
        assert_eq!(q.folded_shape(), vec![1, 2, 2]);
        assert!(matches!(quantics_fold(&[6], 2), Err(SttError::Configuration(_))));
        assert!(quantics_fold(&[9], 3).is_ok());
    }
}
