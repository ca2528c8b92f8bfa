//! Log-normal diffusion on the unit square: a Karhunen–Loève expansion of a
//! squared-exponential Gaussian field and a finite-difference Poisson solve.

use crate::error::{invalid, Result, SttError};
use crate::linalg::{sym_eig, Matrix};
use crate::quadrature::Domain;
use crate::stt::GridAxis;

/// Truncated KL expansion of a field on `[0,1]²` with covariance
/// `σ² exp(-|x - x'|² / 2l²)`.
///
/// The kernel is a product of two one-dimensional kernels, so the Nyström
/// eigenproblem (trapezoid weights) splits into two identical 1-D problems.
/// Two-dimensional eigenpairs are products of 1-D ones.
#[derive(Debug, Clone)]
pub struct KLField {
    pub sigma2: f64,
    pub l: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// 1-D eigenvalues of the unit-variance kernel, descending.
    mu: Vec<f64>,
    /// 1-D eigenfunctions at the nodes, `Σ_j w_j φ(t_j)² = 1`.
    phi: Vec<Vec<f64>>,
    /// All 2-D eigenvalues `σ² μ_a μ_b`, descending.
    pub eigvals: Vec<f64>,
    modes: Vec<(usize, usize)>,
    /// Retained terms.
    pub d_kl: usize,
    /// 1-D eigenvalues that came out negative and were set to zero.
    pub clipped: usize,
}

impl KLField {
    fn kernel(&self, s: f64, t: f64) -> f64 {
        (-(s - t).powi(2) / (2.0 * self.l * self.l)).exp()
    }

    /// Nyström extension of 1-D eigenfunction `a` to `t`.
    fn phi_at(&self, a: usize, t: f64) -> f64 {
        if self.mu[a] == 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.phi[a])
            .map(|((&tj, &wj), &pj)| wj * self.kernel(t, tj) * pj)
            .sum();
        s / self.mu[a]
    }

    /// Eigenfunction `i` (in descending eigenvalue order) at the grid nodes,
    /// first coordinate slowest.
    pub fn eigvec_on_grid(&self, i: usize) -> Vec<f64> {
        let (a, b) = self.modes[i];
        let mut out = Vec::with_capacity(self.nodes.len().pow(2));
        for pa in &self.phi[a] {
            for pb in &self.phi[b] {
                out.push(pa * pb);
            }
        }
        out
    }

    /// Fraction of the total variance captured by the retained terms.
    pub fn captured_variance(&self) -> f64 {
        self.eigvals[..self.d_kl].iter().sum::<f64>() / self.sigma2
    }

    /// `g(x) = Σ_{i<d_kl} √λ_i χ_i(x) y_i`.
    pub fn field(&self, y: &[f64], x: [f64; 2]) -> f64 {
        (0..self.d_kl)
            .map(|i| {
                let (a, b) = self.modes[i];
                self.eigvals[i].sqrt() * self.phi_at(a, x[0]) * self.phi_at(b, x[1]) * y[i]
            })
            .sum()
    }
}

/// Build the KL expansion on an `n × n` uniform grid, keeping the fewest
/// terms whose eigenvalues sum to `var_fraction · σ²`.
pub fn kl_build(sigma2: f64, l: f64, n: usize, var_fraction: f64) -> Result<KLField> {
    if n < 16 {
        return invalid(format!("KL grid needs at least 16 points per side, got {n}"));
    }
    if !(sigma2 > 0.0) || !(l > 0.0) || !(var_fraction > 0.0 && var_fraction <= 1.0) {
        return Err(SttError::Configuration("KL needs sigma2 > 0, l > 0, 0 < var_fraction <= 1".into()));
    }
    let trap = crate::quadrature::trapezoid_rule(n, Domain::unit())?;
    let (nodes, weights) = (trap.nodes, trap.weights);
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let k = Matrix::from_fn(n, n, |i, j| sw[i] * (-(nodes[i] - nodes[j]).powi(2) / (2.0 * l * l)).exp() * sw[j]);
    let (vals, vecs) = sym_eig(&k)?;
    let mut clipped = 0;
    let mut mu = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for idx in (0..n).rev() {
        let mut v = vals[idx];
        if v < 0.0 {
            clipped += 1;
            v = 0.0;
        }
        mu.push(v);
        phi.push((0..n).map(|i| vecs[(i, idx)] / sw[i]).collect::<Vec<f64>>());
    }
    let mut modes: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    // Stable sort keeps (a, b) before (b, a) on exact ties.
    let lambda = |p: &(usize, usize)| sigma2 * mu[p.0] * mu[p.1];
    modes.sort_by(|p, q| lambda(q).partial_cmp(&lambda(p)).unwrap());
    let eigvals: Vec<f64> = modes.iter().map(lambda).collect();
    let total: f64 = eigvals.iter().sum();
    let mut acc = 0.0;
    let mut d_kl = eigvals.len();
    for (i, v) in eigvals.iter().enumerate() {
        acc += v;
        // Relative slack absorbs roundoff when the threshold is hit exactly.
        if acc >= var_fraction * total * (1.0 - 1e-12) {
            d_kl = i + 1;
            break;
        }
    }
    Ok(KLField { sigma2, l, nodes, weights, mu, phi, eigvals, modes, d_kl, clipped })
}

/// The quantity `u(x0, y)` where `-∇·(e^{g(·,y)} ∇u) = 1` on the unit square
/// with `u = 0` on the boundary.
///
/// Five-point finite differences on an `m × m` cell mesh, with harmonic means
/// of the nodal coefficient on cell faces, solved by Jacobi-preconditioned
/// conjugate gradients. The mesh values of every KL mode are cached.
#[derive(Debug, Clone)]
pub struct PoissonModel {
    mesh: usize,
    x0: [f64; 2],
    /// `√λ_i χ_i` at the `(m+1)²` mesh nodes, row index = x-coordinate.
    modes: Vec<Vec<f64>>,
}

impl PoissonModel {
    pub fn new(kl: &KLField, mesh: usize, x0: [f64; 2]) -> Result<Self> {
        if mesh < 32 {
            return invalid(format!("mesh needs at least 32 cells per side, got {mesh}"));
        }
        if !x0.iter().all(|x| (0.0..=1.0).contains(x)) {
            return Err(SttError::Domain(format!("read-off point {x0:?} outside the unit square")));
        }
        let t: Vec<f64> = (0..=mesh).map(|i| i as f64 / mesh as f64).collect();
        let modes = (0..kl.d_kl)
            .map(|i| {
                let (a, b) = kl.modes[i];
                let s = kl.eigvals[i].sqrt();
                let pa: Vec<f64> = t.iter().map(|&x| kl.phi_at(a, x)).collect();
                let pb: Vec<f64> = t.iter().map(|&x| kl.phi_at(b, x)).collect();
                pa.iter().flat_map(|&u| pb.iter().map(move |&v| s * u * v)).collect()
            })
            .collect();
        Ok(Self { mesh, x0, modes })
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn qoi(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return invalid(format!("expected {} KL coordinates, got {}", self.dim(), y.len()));
        }
        let np = self.mesh + 1;
        let mut kappa = vec![0.0; np * np];
        for (m, &yi) in self.modes.iter().zip(y) {
            for (k, v) in kappa.iter_mut().zip(m) {
                *k += yi * v;
            }
        }
        for k in kappa.iter_mut() {
            *k = k.exp();
        }
        let u = solve_poisson(&kappa, self.mesh)?;
        Ok(bilinear(&u, self.mesh, self.x0))
    }
}

/// One-shot version of [`PoissonModel::qoi`].
pub fn poisson_qoi(y: &[f64], kl: &KLField, x0: [f64; 2], mesh: usize) -> Result<f64> {
    PoissonModel::new(kl, mesh, x0)?.qoi(y)
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Nodal solution (boundary included) for nodal coefficient `kappa`.
pub(crate) fn solve_poisson(kappa: &[f64], m: usize) -> Result<Vec<f64>> {
    let np = m + 1;
    let ni = m - 1;
    let n = ni * ni;
    let h2 = 1.0 / (m * m) as f64;
    let at = |i: usize, j: usize| kappa[i * np + j];
    // Face coefficients for interior unknown (i, j), 1-based mesh indices.
    let mut east = vec![0.0; n];
    let mut west = vec![0.0; n];
    let mut north = vec![0.0; n];
    let mut south = vec![0.0; n];
    for i in 1..m {
        for j in 1..m {
            let p = (i - 1) * ni + (j - 1);
            let c = at(i, j);
            east[p] = harmonic(c, at(i + 1, j));
            west[p] = harmonic(c, at(i - 1, j));
            north[p] = harmonic(c, at(i, j + 1));
            south[p] = harmonic(c, at(i, j - 1));
        }
    }
    let diag: Vec<f64> = (0..n).map(|p| east[p] + west[p] + north[p] + south[p]).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 0..ni {
            for j in 0..ni {
                let p = i * ni + j;
                let mut v = diag[p] * x[p];
                if i + 1 < ni {
                    v -= east[p] * x[p + ni];
                }
                if i > 0 {
                    v -= west[p] * x[p - ni];
                }
                if j + 1 < ni {
                    v -= north[p] * x[p + 1];
                }
                if j > 0 {
                    v -= south[p] * x[p - 1];
                }
                out[p] = v;
            }
        }
    };
    let b = vec![h2; n];
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let bnorm = (n as f64).sqrt() * h2;
    let mut converged = false;
    for _ in 0..(10 * n).max(100) {
        apply(&p, &mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-12 * bnorm {
            converged = true;
            break;
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    if !converged {
        return Err(SttError::NumericalFailure("conjugate gradients did not converge".into()));
    }
    let mut u = vec![0.0; np * np];
    for i in 1..m {
        for j in 1..m {
            u[i * np + j] = x[(i - 1) * ni + (j - 1)];
        }
    }
    Ok(u)
}

fn bilinear(u: &[f64], m: usize, x0: [f64; 2]) -> f64 {
    let np = m + 1;
    let locate = |x: f64| {
        let s = x * m as f64;
        let i = (s.floor() as usize).min(m - 1);
        (i, s - i as f64)
    };
    let (i, fx) = locate(x0[0]);
    let (j, fy) = locate(x0[1]);
    let v = |a: usize, b: usize| u[a * np + b];
    (1.0 - fx) * (1.0 - fy) * v(i, j) + fx * (1.0 - fy) * v(i + 1, j) + (1.0 - fx) * fy * v(i, j + 1)
        + fx * fy * v(i + 1, j + 1)
}

/// Gauss–Hermite grid axes for `d` KL coordinates at polynomial degree `n`.
pub fn hermite_axes(d: usize, degree: usize) -> Result<Vec<GridAxis>> {
    let rule = crate::quadrature::gauss_rule(crate::quadrature::RuleFamily::HermiteGaussian, degree + 1)?;
    Ok(vec![GridAxis::from(rule); d])
}
