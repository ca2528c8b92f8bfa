//! One-dimensional quadrature rules for probability measures, orthonormal
//! polynomial bases and interpolation matrices.
//!
//! Measures are normalized: the uniform family carries density `1/(b-a)` on
//! `[a, b]` and the Hermite family is the standard normal. Weights of every
//! rule therefore sum to one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SttError};
use crate::linalg::{symtridiag_eig, Matrix};

/// Support of a one-dimensional measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    RealLine,
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(SttError::Configuration(format!("invalid interval [{a}, {b}]")));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn unit() -> Self {
        Domain::Interval { a: 0.0, b: 1.0 }
    }

    pub fn symmetric() -> Self {
        Domain::Interval { a: -1.0, b: 1.0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Interval { a, b } => {
                let slack = 1e-12 * (b - a);
                x >= a - slack && x <= b + slack && x.is_finite()
            }
            Domain::RealLine => x.is_finite(),
        }
    }

    pub(crate) fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(SttError::Domain(format!("point {x} outside {self:?}")))
        }
    }
}

/// Families of one-dimensional rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleFamily {
    LegendreUniform,
    HermiteGaussian,
    NewtonCotesTrapezoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub family: RuleFamily,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: Domain,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Affinely map a bounded rule onto `[a, b]`. Weights are unchanged since
    /// the measure stays a probability measure.
    pub fn mapped(&self, domain: Domain) -> Result<QuadratureRule> {
        let (Domain::Interval { a: a0, b: b0 }, Domain::Interval { a, b }) = (self.domain, domain) else {
            return Err(SttError::Configuration("only bounded rules can be mapped".into()));
        };
        let nodes = self.nodes.iter().map(|&x| a + (b - a) * (x - a0) / (b0 - a0)).collect();
        Ok(QuadratureRule { family: self.family, nodes, weights: self.weights.clone(), domain })
    }
}

/// Three-term recurrence of the orthonormal polynomials of a family:
/// `x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}` on the reference domain.
fn recurrence(family: PolyFamily, k: usize) -> (f64, f64) {
    match family {
        PolyFamily::Legendre => {
            let k = k as f64;
            (0.0, k / (4.0 * k * k - 1.0).sqrt())
        }
        PolyFamily::Hermite => (0.0, (k as f64).sqrt()),
    }
}

/// `n`-point Gauss rule. Legendre rules live on `[-1, 1]`, Hermite rules on
/// the real line.
pub fn gauss_rule(family: RuleFamily, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return invalid("Gauss rule needs at least one node");
    }
    let (poly, domain) = match family {
        RuleFamily::LegendreUniform => (PolyFamily::Legendre, Domain::symmetric()),
        RuleFamily::HermiteGaussian => (PolyFamily::Hermite, Domain::RealLine),
        RuleFamily::NewtonCotesTrapezoid => {
            return Err(SttError::Configuration("trapezoid is not a Gauss family".into()))
        }
    };
    let diag: Vec<f64> = (0..n).map(|k| recurrence(poly, k).0).collect();
    let off: Vec<f64> = (1..n).map(|k| recurrence(poly, k).1).collect();
    let (mut nodes, first) = symtridiag_eig(&diag, &off)?;
    let mut weights: Vec<f64> = first.iter().map(|z| z * z).collect();
    // Symmetric measures: enforce exact symmetry of the computed rule.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(QuadratureRule { family, nodes, weights, domain })
}

/// Gauss–Legendre rule mapped to `domain`, or Gauss–Hermite for the real line.
pub fn gauss_rule_on(family: RuleFamily, n: usize, domain: Domain) -> Result<QuadratureRule> {
    let rule = gauss_rule(family, n)?;
    match (family, domain) {
        (RuleFamily::LegendreUniform, Domain::Interval { .. }) => rule.mapped(domain),
        (RuleFamily::HermiteGaussian, Domain::RealLine) => Ok(rule),
        _ => Err(SttError::Configuration(format!("family {family:?} incompatible with {domain:?}"))),
    }
}

/// Composite trapezoid rule with `n` equispaced nodes including both ends,
/// normalized to a probability measure.
pub fn trapezoid_rule(n: usize, domain: Domain) -> Result<QuadratureRule> {
    if n < 2 {
        return invalid(format!("trapezoid rule needs n >= 2, got {n}"));
    }
    let Domain::Interval { a, b } = domain else {
        return Err(SttError::Configuration("trapezoid rule needs a bounded domain".into()));
    };
    let h = (b - a) / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    nodes[n - 1] = b;
    let inner = 1.0 / (n - 1) as f64;
    let weights = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * inner } else { inner })
        .collect();
    Ok(QuadratureRule { family: RuleFamily::NewtonCotesTrapezoid, nodes, weights, domain })
}

/// Orthonormal polynomial families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolyFamily {
    Legendre,
    Hermite,
}

impl PolyFamily {
    pub fn rule_family(self) -> RuleFamily {
        match self {
            PolyFamily::Legendre => RuleFamily::LegendreUniform,
            PolyFamily::Hermite => RuleFamily::HermiteGaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    OrthonormalPoly,
    Hat,
    Lagrange,
}

/// A univariate basis on one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub family: PolyFamily,
    pub degree: usize,
    pub domain: Domain,
    /// Interpolation nodes; present for hat and Lagrange bases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<f64>>,
}

impl BasisSpec {
    pub fn orthonormal(family: PolyFamily, degree: usize, domain: Domain) -> Self {
        Self { kind: BasisKind::OrthonormalPoly, family, degree, domain, nodes: None }
    }

    pub fn hat(nodes: Vec<f64>, domain: Domain) -> Self {
        Self {
            kind: BasisKind::Hat,
            family: PolyFamily::Legendre,
            degree: nodes.len().saturating_sub(1),
            domain,
            nodes: Some(nodes),
        }
    }

    pub fn lagrange(nodes: Vec<f64>, family: PolyFamily, domain: Domain) -> Self {
        Self {
            kind: BasisKind::Lagrange,
            family,
            degree: nodes.len().saturating_sub(1),
            domain,
            nodes: Some(nodes),
        }
    }

    /// Number of basis functions.
    pub fn size(&self) -> usize {
        self.degree + 1
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, &self.nodes) {
            (BasisKind::OrthonormalPoly, _) => {
                let ok = matches!(
                    (self.family, self.domain),
                    (PolyFamily::Legendre, Domain::Interval { .. }) | (PolyFamily::Hermite, Domain::RealLine)
                );
                if !ok {
                    return Err(SttError::Configuration(format!(
                        "{:?} basis incompatible with {:?}",
                        self.family, self.domain
                    )));
                }
                Ok(())
            }
            (_, None) => Err(SttError::Configuration("interpolation basis needs nodes".into())),
            (_, Some(n)) if n.len() != self.degree + 1 => {
                Err(SttError::Configuration("node count does not match degree".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Values of the orthonormal polynomials `φ_0..φ_degree` at `x` (reference
/// coordinates already applied).
pub fn orthonormal_values(family: PolyFamily, degree: usize, t: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if degree == 0 {
        return;
    }
    let (a0, b1) = (recurrence(family, 0).0, recurrence(family, 1).1);
    out[1] = (t - a0) / b1;
    for k in 1..degree {
        let (ak, bk) = recurrence(family, k);
        let bk1 = recurrence(family, k + 1).1;
        out[k + 1] = ((t - ak) * out[k] - bk * out[k - 1]) / bk1;
    }
}

fn reference_coordinate(domain: Domain, x: f64) -> f64 {
    match domain {
        Domain::Interval { a, b } => (2.0 * x - a - b) / (b - a),
        Domain::RealLine => x,
    }
}

/// Matrix with entry `(i, j) = φ_j(points_i)`.
pub fn eval_basis(spec: &BasisSpec, points: &[f64]) -> Result<Matrix> {
    spec.validate()?;
    for &x in points {
        spec.domain.check(x)?;
    }
    match spec.kind {
        BasisKind::OrthonormalPoly => {
            let n = spec.size();
            let mut m = Matrix::zeros(points.len(), n);
            for (i, &x) in points.iter().enumerate() {
                let t = reference_coordinate(spec.domain, x);
                orthonormal_values(spec.family, spec.degree, t, m.row_mut(i));
            }
            Ok(m)
        }
        BasisKind::Hat => hat_matrix(spec.nodes.as_deref().unwrap(), points),
        BasisKind::Lagrange => lagrange_matrix(spec.nodes.as_deref().unwrap(), points),
    }
}

/// Lagrange interpolation matrix from `src` nodes to `targets` in barycentric
/// form; row `i` holds `ℓ_j(targets_i)`.
pub fn lagrange_matrix(src: &[f64], targets: &[f64]) -> Result<Matrix> {
    let n = src.len();
    if n == 0 {
        return invalid("no interpolation nodes");
    }
    let mut bary = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                let diff = src[j] - src[k];
                if diff == 0.0 {
                    return invalid(format!("duplicate interpolation node {}", src[j]));
                }
                bary[j] /= diff;
            }
        }
    }
    let mut m = Matrix::zeros(targets.len(), n);
    for (i, &x) in targets.iter().enumerate() {
        if !x.is_finite() {
            return Err(SttError::Domain(format!("non-finite target {x}")));
        }
        let row = m.row_mut(i);
        if let Some(j) = src.iter().position(|&s| s == x) {
            row[j] = 1.0;
            continue;
        }
        let mut denom = 0.0;
        for j in 0..n {
            let t = bary[j] / (x - src[j]);
            row[j] = t;
            denom += t;
        }
        row.iter_mut().for_each(|v| *v /= denom);
    }
    Ok(m)
}

/// Piecewise-linear (hat function) interpolation matrix.
pub fn hat_matrix(src: &[f64], targets: &[f64]) -> Result<Matrix> {
    let n = src.len();
    if n < 2 {
        return invalid("hat basis needs at least two nodes");
    }
    if src.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid("hat nodes must be strictly ascending");
    }
    let (lo, hi) = (src[0], src[n - 1]);
    let slack = 1e-12 * (hi - lo);
    let mut m = Matrix::zeros(targets.len(), n);
    for (i, &x) in targets.iter().enumerate() {
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(SttError::Domain(format!("target {x} outside [{lo}, {hi}]")));
        }
        let x = x.clamp(lo, hi);
        // Last j with src[j] <= x, limited to the final cell.
        let j = src.partition_point(|&s| s <= x).saturating_sub(1).min(n - 2);
        let t = (x - src[j]) / (src[j + 1] - src[j]);
        let row = m.row_mut(i);
        if t == 0.0 {
            row[j] = 1.0;
        } else if t == 1.0 {
            row[j + 1] = 1.0;
        } else {
            row[j] = 1.0 - t;
            row[j + 1] = t;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_legendre() {
        let r = gauss_rule(RuleFamily::LegendreUniform, 2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + x).abs() < 1e-15 && (r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15 && (r.weights[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_point_hermite() {
        let r = gauss_rule(RuleFamily::HermiteGaussian, 1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![1.0]);
    }

    #[test]
    fn legendre_sixth_moment() {
        let r = gauss_rule(RuleFamily::LegendreUniform, 7).unwrap();
        assert!((r.integrate(|x| x.powi(6)) - 1.0 / 7.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_errors() {
        assert!(gauss_rule(RuleFamily::LegendreUniform, 0).is_err());
        assert!(matches!(
            gauss_rule(RuleFamily::NewtonCotesTrapezoid, 3),
            Err(SttError::Configuration(_))
        ));
    }

    #[test]
    fn mapping_keeps_weights() {
        let r = gauss_rule_on(RuleFamily::LegendreUniform, 5, Domain::unit()).unwrap();
        let r0 = gauss_rule(RuleFamily::LegendreUniform, 5).unwrap();
        assert_eq!(r.weights, r0.weights);
        assert!((r.integrate(|x| x) - 0.5).abs() < 1e-15);
        assert!((r.integrate(|x| x * x) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_examples() {
        let r = trapezoid_rule(2, Domain::unit()).unwrap();
        assert_eq!(r.nodes, vec![0.0, 1.0]);
        assert_eq!(r.weights, vec![0.5, 0.5]);
        let r = trapezoid_rule(3, Domain::unit()).unwrap();
        assert_eq!(r.weights, vec![0.25, 0.5, 0.25]);
        let r = trapezoid_rule(33, Domain::unit()).unwrap();
        assert!((r.integrate(|x| x) - 0.5).abs() < 1e-15);
        assert!(trapezoid_rule(1, Domain::unit()).is_err());
    }

    #[test]
    fn legendre_basis_at_one() {
        let spec = BasisSpec::orthonormal(PolyFamily::Legendre, 1, Domain::symmetric());
        let m = eval_basis(&spec, &[1.0]).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((m[(0, 1)] - 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(eval_basis(&spec, &[1.5]), Err(SttError::Domain(_))));
    }

    #[test]
    fn hat_examples() {
        let spec = BasisSpec::hat(vec![0.0, 0.5, 1.0], Domain::unit());
        let m = eval_basis(&spec, &[0.25]).unwrap();
        assert_eq!(m.row(0), &[0.5, 0.5, 0.0]);
        let m = hat_matrix(&[0.0, 1.0], &[0.3]).unwrap();
        assert!((m[(0, 0)] - 0.7).abs() < 1e-15 && (m[(0, 1)] - 0.3).abs() < 1e-15);
        let m = hat_matrix(&[0.0, 0.5, 1.0], &[0.5]).unwrap();
        assert_eq!(m.row(0), &[0.0, 1.0, 0.0]);
        assert!(matches!(hat_matrix(&[0.0, 1.0], &[1.5]), Err(SttError::Domain(_))));
    }

    #[test]
    fn lagrange_examples() {
        let nodes = [0.1, 0.4, 0.9];
        let m = lagrange_matrix(&nodes, &nodes).unwrap();
        assert!(m.sub(&Matrix::identity(3)).max_abs() == 0.0);
        let m = lagrange_matrix(&[0.0, 1.0], &[0.5]).unwrap();
        assert!((m[(0, 0)] - 0.5).abs() < 1e-15 && (m[(0, 1)] - 0.5).abs() < 1e-15);
        assert!(lagrange_matrix(&[0.0, 0.0], &[0.5]).is_err());
    }
}
