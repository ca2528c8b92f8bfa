//! Monte Carlo estimate of the relative L² error of a surrogate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Result, SttError};
use crate::linalg::Matrix;
use crate::quadrature::Domain;
use crate::stt::Surrogate;

/// `‖f − s‖ / ‖f‖` with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub rel_l2: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Points drawn from a product measure together with the true function values.
#[derive(Debug, Clone)]
pub struct MonteCarloSet {
    pub points: Matrix,
    pub values: Vec<f64>,
    domains: Vec<Domain>,
    seed: u64,
}

/// Draw `n` points from the product of the given one-dimensional measures:
/// uniform on intervals, standard normal on the real line.
pub fn sample_points(domains: &[Domain], n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = domains.len();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        for dom in domains {
            data.push(match *dom {
                Domain::Interval { a, b } => a + (b - a) * rng.gen::<f64>(),
                Domain::RealLine => rng.sample::<f64, _>(StandardNormal),
            });
        }
    }
    Matrix::from_vec(n, d, data).expect("sized above")
}

impl MonteCarloSet {
    /// Evaluate `f` at `n` points of the measure described by `domains`. The
    /// evaluations run on the rayon pool; the result does not depend on the
    /// number of threads.
    pub fn new<F>(f: &F, domains: &[Domain], n: usize, seed: u64) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let points = sample_points(domains, n, seed);
        let values = (0..n).into_par_iter().map(|i| f(points.row(i))).collect();
        Self { points, values, domains: domains.to_vec(), seed }
    }

    /// Grow the set to `n` points. The sampler is sequential in the seed, so
    /// the existing points are a prefix of the larger set and only the new
    /// ones are evaluated.
    pub fn extend_to<F>(&mut self, f: &F, n: usize)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let old = self.len();
        if n <= old {
            return;
        }
        let points = sample_points(&self.domains, n, self.seed);
        let fresh: Vec<f64> = (old..n).into_par_iter().map(|i| f(points.row(i))).collect();
        self.values.extend(fresh);
        self.points = points;
    }

    /// Relative error of `s`, doubling the sample count until the standard
    /// error is at most `target` times the estimate or `max_samples` is hit.
    pub fn rel_error_adaptive<F>(&mut self, f: &F, s: &Surrogate, target: f64, max_samples: usize) -> Result<ErrorEstimate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        loop {
            let e = self.rel_error(s)?;
            if e.std_error <= target * e.rel_l2 || self.len() >= max_samples {
                return Ok(e);
            }
            let next = (2 * self.len()).min(max_samples);
            self.extend_to(f, next);
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Relative error of the approximation values `approx` (one per point).
    pub fn rel_error_of(&self, approx: &[f64]) -> Result<ErrorEstimate> {
        if approx.len() != self.len() {
            return invalid("one approximation value per sample required");
        }
        if self.len() < 2 {
            return invalid("at least two samples required");
        }
        let n = self.len() as f64;
        let e2: Vec<f64> = self.values.iter().zip(approx).map(|(f, s)| (f - s).powi(2)).collect();
        let f2: Vec<f64> = self.values.iter().map(|f| f * f).collect();
        let a = e2.iter().sum::<f64>() / n;
        let b = f2.iter().sum::<f64>() / n;
        if !(b > 0.0) {
            return Err(SttError::DegenerateFunction("function vanishes on every sample".into()));
        }
        let q = a / b;
        let rel = q.sqrt();
        // Delta method for the ratio of two correlated means.
        let (mut va, mut vb, mut cab) = (0.0, 0.0, 0.0);
        for (x, y) in e2.iter().zip(&f2) {
            va += (x - a).powi(2);
            vb += (y - b).powi(2);
            cab += (x - a) * (y - b);
        }
        let denom = n - 1.0;
        let (va, vb, cab) = (va / denom, vb / denom, cab / denom);
        let var_q = (va / (b * b) + a * a * vb / b.powi(4) - 2.0 * a * cab / b.powi(3)).max(0.0) / n;
        let std_error = if rel > 0.0 { var_q.sqrt() / (2.0 * rel) } else { 0.0 };
        Ok(ErrorEstimate { rel_l2: rel, std_error, samples: self.len() })
    }

    pub fn rel_error(&self, s: &Surrogate) -> Result<ErrorEstimate> {
        let approx = (0..self.len())
            .into_par_iter()
            .map(|i| s.eval_point(self.points.row(i)))
            .collect::<Result<Vec<_>>>()?;
        self.rel_error_of(&approx)
    }
}

/// Domains of the measure a surrogate was built for.
pub fn surrogate_domains(s: &Surrogate) -> Vec<Domain> {
    s.basis.iter().map(|b| b.domain).collect()
}

/// Monte Carlo relative L² error of `s` against `f` with `n_samples` points
/// drawn from the build measure.
pub fn rel_l2_error<F>(f: &F, s: &Surrogate, n_samples: usize, seed: u64) -> Result<ErrorEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_samples < 100 {
        return invalid(format!("at least 100 samples required, got {n_samples}"));
    }
    MonteCarloSet::new(f, &surrogate_domains(s), n_samples, seed).rel_error(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_zero_approximations() {
        let set = MonteCarloSet::new(&|x: &[f64]| 1.0 + x[0], &[Domain::unit()], 500, 1);
        let e = set.rel_error_of(&set.values.clone()).unwrap();
        assert_eq!(e.rel_l2, 0.0);
        let ones = MonteCarloSet::new(&|_: &[f64]| 1.0, &[Domain::unit()], 500, 1);
        let e = ones.rel_error_of(&vec![0.0; 500]).unwrap();
        assert!((e.rel_l2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn extension_keeps_prefix() {
        let f = |x: &[f64]| x[0] * x[1];
        let mut small = MonteCarloSet::new(&f, &[Domain::unit(), Domain::RealLine], 150, 4);
        small.extend_to(&f, 400);
        let big = MonteCarloSet::new(&f, &[Domain::unit(), Domain::RealLine], 400, 4);
        assert_eq!(small.points, big.points);
        assert_eq!(small.values, big.values);
    }

    #[test]
    fn zero_function_is_degenerate() {
        let set = MonteCarloSet::new(&|_: &[f64]| 0.0, &[Domain::unit()], 200, 1);
        assert!(matches!(set.rel_error_of(&vec![1.0; 200]), Err(SttError::DegenerateFunction(_))));
    }

    #[test]
    fn normal_samples_have_unit_variance() {
        let p = sample_points(&[Domain::RealLine], 20000, 5);
        let m2: f64 = p.as_slice().iter().map(|x| x * x).sum::<f64>() / 20000.0;
        assert!((m2 - 1.0).abs() < 0.05);
    }
}
