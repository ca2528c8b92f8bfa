//! Mixed Fourier-mode probes and the Gaussian bump.

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::quadrature::{orthonormal_values, PolyFamily};

/// Functions on `[-1, 1]^d` built from normalized Legendre polynomials of a
/// subset `dims` of the coordinates; constant along the others.
#[derive(Debug, Clone, PartialEq)]
pub enum FourierProbe {
    /// `Π_k φ_{degrees[k]}(x_{dims[k]})`: a single mixed mode.
    Single { d: usize, dims: Vec<usize>, degrees: Vec<usize> },
    /// `Σ_i exp(-iᵀ Σ i) Π_k φ_{i_k}(x_{dims[k]})` over `i ∈ {0..n}^c`.
    Coupled { d: usize, dims: Vec<usize>, n: usize, sigma: Matrix },
}

impl FourierProbe {
    pub fn single(d: usize, dims: Vec<usize>, degrees: Vec<usize>) -> Result<Self> {
        check_dims(d, &dims)?;
        if degrees.len() != dims.len() {
            return invalid("one degree per probed dimension required");
        }
        Ok(FourierProbe::Single { d, dims, degrees })
    }

    pub fn coupled(d: usize, dims: Vec<usize>, n: usize, sigma: Matrix) -> Result<Self> {
        check_dims(d, &dims)?;
        let c = dims.len();
        if sigma.rows() != c || sigma.cols() != c {
            return invalid(format!("coupling matrix must be {c}x{c}"));
        }
        if sigma.sub(&sigma.transpose()).max_abs() > 0.0 {
            return invalid("coupling matrix must be symmetric");
        }
        Ok(FourierProbe::Coupled { d, dims, n, sigma })
    }

    pub fn dim(&self) -> usize {
        match self {
            FourierProbe::Single { d, .. } | FourierProbe::Coupled { d, .. } => *d,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FourierProbe::Single { dims, degrees, .. } => dims
                .iter()
                .zip(degrees)
                .map(|(&j, &l)| {
                    let mut phi = vec![0.0; l + 1];
                    orthonormal_values(PolyFamily::Legendre, l, x[j], &mut phi);
                    phi[l]
                })
                .product(),
            FourierProbe::Coupled { dims, n, sigma, .. } => {
                let c = dims.len();
                let phis: Vec<Vec<f64>> = dims
                    .iter()
                    .map(|&j| {
                        let mut phi = vec![0.0; n + 1];
                        orthonormal_values(PolyFamily::Legendre, *n, x[j], &mut phi);
                        phi
                    })
                    .collect();
                let mut idx = vec![0usize; c];
                let mut total = 0.0;
                loop {
                    let mut quad = 0.0;
                    for a in 0..c {
                        for b in 0..c {
                            quad += idx[a] as f64 * sigma[(a, b)] * idx[b] as f64;
                        }
                    }
                    let prod: f64 = idx.iter().zip(&phis).map(|(&i, p)| p[i]).product();
                    total += (-quad).exp() * prod;
                    // Odometer over {0..n}^c.
                    let mut k = c;
                    loop {
                        if k == 0 {
                            return total;
                        }
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] <= *n {
                            break;
                        }
                        idx[k] = 0;
                    }
                }
            }
        }
    }
}

fn check_dims(d: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&j| j >= d) {
        return invalid(format!("probed dimensions {dims:?} must be a nonempty subset of 0..{d}"));
    }
    let mut sorted = dims.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != dims.len() {
        return invalid("probed dimensions must be distinct");
    }
    Ok(())
}

/// `exp(-|x - x0|² / 2l²)`.
pub fn bump(x0: Vec<f64>, l: f64) -> Result<impl Fn(&[f64]) -> f64 + Sync + Send + Clone> {
    if !(l > 0.0) {
        return invalid(format!("bump width must be positive, got {l}"));
    }
    let scale = 1.0 / (2.0 * l * l);
    Ok(move |x: &[f64]| (-x.iter().zip(&x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * scale).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_peak_and_width() {
        let f = bump(vec![0.2, 0.2], 0.05).unwrap();
        assert_eq!(f(&[0.2, 0.2]), 1.0);
        let wide = bump(vec![0.5; 3], 100.0).unwrap();
        assert!(wide(&[0.0, 1.0, 0.0]) >= (-3.0f64 / (2.0 * 100.0 * 100.0)).exp());
        assert!(bump(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn single_mode_is_legendre_product() {
        let p = FourierProbe::single(3, vec![0, 2], vec![1, 2]).unwrap();
        let x = [0.3, -0.7, 0.5];
        let p2 = 5f64.sqrt() * (3.0 * 0.25 - 1.0) / 2.0;
        assert!((p.eval(&x) - 3f64.sqrt() * 0.3 * p2).abs() < 1e-14);
    }

    #[test]
    fn coupled_matches_direct_double_sum() {
        let sigma = Matrix::from_rows(&[vec![1.0, -0.9], vec![-0.9, 1.0]]).unwrap();
        let p = FourierProbe::coupled(3, vec![0, 1], 3, sigma).unwrap();
        let x = [0.1, -0.4, 0.9];
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        orthonormal_values(PolyFamily::Legendre, 3, x[0], &mut a);
        orthonormal_values(PolyFamily::Legendre, 3, x[1], &mut b);
        let mut want = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let (fi, fj) = (i as f64, j as f64);
                want += (-(fi * fi + fj * fj - 1.8 * fi * fj)).exp() * a[i] * b[j];
            }
        }
        assert!((p.eval(&x) - want).abs() < 1e-13);
    }

    #[test]
    fn invalid_probes() {
        let s = Matrix::identity(2);
        assert!(FourierProbe::coupled(2, vec![0, 2], 3, s.clone()).is_err());
        assert!(FourierProbe::coupled(2, vec![0, 0], 3, s).is_err());
        assert!(FourierProbe::single(2, vec![0], vec![1, 2]).is_err());
    }
}
