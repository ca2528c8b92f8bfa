//! Spectral tensor-train surrogates.
//!
//! A black-box function is sampled on a tensor grid through the cross engine.
//! Samples are multiplied by the square root of the tensor-product quadrature
//! weight, so the Frobenius error of the train tracks the L² error of the
//! function. The weight is divided back out core by core, since the weight
//! tensor is an outer product. The resulting value cores are either projected
//! onto orthonormal polynomials or kept for one-dimensional interpolation.

mod io;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross::{cross_on_quantics, dmrg_cross, CrossConfig, EvalLedger};
use crate::error::{invalid, Result, SttError};
use crate::linalg::Matrix;
use crate::quadrature::{
    gauss_rule_on, hat_matrix, lagrange_matrix, orthonormal_values, BasisKind, BasisSpec, Domain, PolyFamily,
    QuadratureRule,
};
use crate::tt::{Core, TTTensor};

pub use io::{load_surrogate, read_surrogate, save_surrogate, write_surrogate, FORMAT_VERSION};

/// How a surrogate turns its cores into functions of a continuous argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateMode {
    Projection,
    LagrangeInterp,
    LinearInterp,
}

/// Nodes of one grid dimension and, when weighting applies, their
/// quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub nodes: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    pub domain: Domain,
}

impl From<QuadratureRule> for GridAxis {
    fn from(r: QuadratureRule) -> Self {
        GridAxis { nodes: r.nodes, weights: Some(r.weights), domain: r.domain }
    }
}

impl GridAxis {
    /// `n` equispaced nodes covering an interval, endpoints included.
    pub fn equispaced(n: usize, domain: Domain) -> Result<Self> {
        let Domain::Interval { a, b } = domain else {
            return Err(SttError::Configuration("equispaced grid needs a bounded interval".into()));
        };
        if n < 2 {
            return invalid("equispaced grid needs at least 2 nodes");
        }
        let nodes = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        Ok(GridAxis { nodes, weights: None, domain })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn is_equispaced(&self) -> bool {
        let n = self.nodes.len();
        if n < 2 {
            return true;
        }
        let h = (self.nodes[n - 1] - self.nodes[0]) / (n - 1) as f64;
        self.nodes.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs())
    }
}

/// Tensor-product grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return invalid("grid needs at least one dimension");
        }
        for ax in &axes {
            if ax.is_empty() {
                return invalid("empty grid axis");
            }
            if let Some(w) = &ax.weights {
                if w.len() != ax.nodes.len() {
                    return invalid("weights and nodes differ in length");
                }
            }
            for &x in &ax.nodes {
                ax.domain.check(x)?;
            }
        }
        Ok(Self { axes })
    }

    /// Gauss rules with `degree + 1` nodes on every dimension. The polynomial
    /// family follows the domain: Legendre on intervals, Hermite on the line.
    pub fn gauss(degrees: &[usize], domains: &[Domain]) -> Result<Self> {
        if degrees.len() != domains.len() {
            return invalid("degrees and domains differ in length");
        }
        let axes = degrees
            .iter()
            .zip(domains)
            .map(|(&n, &dom)| gauss_rule_on(family_for(dom).rule_family(), n + 1, dom).map(GridAxis::from))
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    pub fn equispaced(sizes: &[usize], domains: &[Domain]) -> Result<Self> {
        if sizes.len() != domains.len() {
            return invalid("sizes and domains differ in length");
        }
        Self::new(sizes.iter().zip(domains).map(|(&n, &d)| GridAxis::equispaced(n, d)).collect::<Result<_>>()?)
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(GridAxis::len).collect()
    }

    fn without_weights(&self) -> GridSpec {
        GridSpec { axes: self.axes.iter().map(|a| GridAxis { weights: None, ..a.clone() }).collect() }
    }
}

fn family_for(domain: Domain) -> PolyFamily {
    match domain {
        Domain::Interval { .. } => PolyFamily::Legendre,
        Domain::RealLine => PolyFamily::Hermite,
    }
}

/// Batched evaluation of `h(X_i) = f(X_i)·√W_i` on a grid.
///
/// `order[k]` names the physical dimension placed at train position `k`.
pub struct WeightedModel<'a, F> {
    f: &'a F,
    grid: &'a GridSpec,
    sqrt_w: Vec<Option<Vec<f64>>>,
    order: Vec<usize>,
    pub parallel: bool,
}

impl<'a, F> WeightedModel<'a, F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn with_order(f: &'a F, grid: &'a GridSpec, order: Vec<usize>) -> Result<Self> {
        let mut sqrt_w = Vec::with_capacity(grid.ndim());
        for ax in &grid.axes {
            sqrt_w.push(match &ax.weights {
                None => None,
                Some(w) => {
                    if let Some(bad) = w.iter().find(|&&x| !(x > 0.0)) {
                        return Err(SttError::Configuration(format!("nonpositive quadrature weight {bad}")));
                    }
                    Some(w.iter().map(|x| x.sqrt()).collect())
                }
            });
        }
        Ok(Self { f, grid, sqrt_w, order, parallel: false })
    }

    /// Value at one train multi-index.
    pub fn value(&self, idx: &[usize]) -> f64 {
        let d = self.grid.ndim();
        let mut x = vec![0.0; d];
        let mut scale = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            let dim = self.order[k];
            x[dim] = self.grid.axes[dim].nodes[i];
            if let Some(s) = &self.sqrt_w[dim] {
                scale *= s[i];
            }
        }
        (self.f)(&x) * scale
    }

    pub fn eval_batch(&self, batch: &[Vec<usize>]) -> Vec<f64> {
        if self.parallel {
            batch.par_iter().map(|i| self.value(i)).collect()
        } else {
            batch.iter().map(|i| self.value(i)).collect()
        }
    }

    /// Divide the weight back out of train cores (in train order).
    fn unweight(&self, cores: &mut [Core]) {
        for (k, core) in cores.iter_mut().enumerate() {
            if let Some(s) = &self.sqrt_w[self.order[k]] {
                for a in 0..core.rl {
                    for (i, si) in s.iter().enumerate() {
                        for b in 0..core.rr {
                            *core.at_mut(a, i, b) /= si;
                        }
                    }
                }
            }
        }
    }
}

/// The weighted sampling callback for `f` on `grid`, in physical dimension
/// order.
pub fn weighted_eval_fn<'a, F>(f: &'a F, grid: &'a GridSpec) -> Result<impl FnMut(&[Vec<usize>]) -> Vec<f64> + 'a>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let model = WeightedModel::with_order(f, grid, (0..grid.ndim()).collect())?;
    Ok(move |batch: &[Vec<usize>]| model.eval_batch(batch))
}

/// Options shared by the surrogate builders.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub cross: CrossConfig,
    /// Run the cross engine on the base-2 quantics folding when every grid
    /// size is a power of two.
    pub quantics: bool,
    /// Evaluate each batch of samples on the rayon pool.
    pub parallel: bool,
    /// Train position `k` holds physical dimension `permutation[k]`.
    pub permutation: Option<Vec<usize>>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { cross: CrossConfig::default(), quantics: true, parallel: false, permutation: None }
    }
}

impl BuildOptions {
    pub fn with_eps(eps: f64) -> Self {
        Self { cross: CrossConfig::with_eps(eps), ..Self::default() }
    }
}

/// Provenance stored alongside the cores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub eps: f64,
    pub seed: u64,
    /// Black-box evaluations spent by this build (cache misses).
    pub eval_count: usize,
    pub sweeps: usize,
    pub converged: bool,
    pub seconds: f64,
}

/// An evaluable spectral tensor-train approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub mode: SurrogateMode,
    /// Coefficient cores for projection, value cores otherwise; in train
    /// order.
    pub cores: Vec<Core>,
    /// One basis per physical dimension.
    pub basis: Vec<BasisSpec>,
    /// Train position `k` holds physical dimension `order[k]`.
    pub order: Vec<usize>,
    pub info: BuildInfo,
}

impl Surrogate {
    pub fn ndim(&self) -> usize {
        self.basis.len()
    }

    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![1];
        r.extend(self.cores.iter().map(|c| c.rr));
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn train(&self) -> Result<TTTensor> {
        TTTensor::new(self.cores.clone())
    }

    fn validate(&self) -> Result<()> {
        let d = self.basis.len();
        if d == 0 || self.cores.len() != d || self.order.len() != d {
            return invalid("surrogate dimension mismatch");
        }
        check_permutation(&self.order, d)?;
        self.train()?;
        for (k, core) in self.cores.iter().enumerate() {
            let spec = &self.basis[self.order[k]];
            spec.validate()?;
            if core.n != spec.size() {
                return invalid(format!("core {k} has {} slices, basis has {}", core.n, spec.size()));
            }
            if !core.data.iter().all(|x| x.is_finite()) {
                return invalid("non-finite core entry");
            }
        }
        Ok(())
    }

    /// Value at one point given in physical coordinates.
    pub fn eval_point(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.ndim() {
            return invalid(format!("point has {} coordinates, surrogate has {}", x.len(), self.ndim()));
        }
        let mut v = vec![1.0];
        let mut next = Vec::new();
        let mut phi = Vec::new();
        for (k, core) in self.cores.iter().enumerate() {
            let dim = self.order[k];
            basis_row(&self.basis[dim], x[dim], &mut phi)?;
            next.clear();
            next.resize(core.rr, 0.0);
            for (a, &va) in v.iter().enumerate() {
                if va == 0.0 {
                    continue;
                }
                for (i, &p) in phi.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let base = (a * core.n + i) * core.rr;
                    let c = va * p;
                    for (o, g) in next.iter_mut().zip(&core.data[base..base + core.rr]) {
                        *o += c * g;
                    }
                }
            }
            std::mem::swap(&mut v, &mut next);
        }
        Ok(v[0])
    }

    /// Values at the rows of `points` (one point per row, physical order).
    pub fn eval(&self, points: &Matrix) -> Result<Vec<f64>> {
        if points.cols() != self.ndim() {
            return invalid(format!("points have {} columns, surrogate has {} dimensions", points.cols(), self.ndim()));
        }
        (0..points.rows()).map(|i| self.eval_point(points.row(i))).collect()
    }
}

/// Values of every basis function of `spec` at `x`.
fn basis_row(spec: &BasisSpec, x: f64, out: &mut Vec<f64>) -> Result<()> {
    spec.domain.check(x)?;
    out.clear();
    match spec.kind {
        BasisKind::OrthonormalPoly => {
            out.resize(spec.size(), 0.0);
            let t = match spec.domain {
                Domain::Interval { a, b } => ((2.0 * x - a - b) / (b - a)).clamp(-1.0, 1.0),
                Domain::RealLine => x,
            };
            orthonormal_values(spec.family, spec.degree, t, out);
        }
        BasisKind::Hat => out.extend_from_slice(hat_matrix(spec.nodes.as_deref().unwrap_or(&[]), &[x])?.row(0)),
        BasisKind::Lagrange => {
            out.extend_from_slice(lagrange_matrix(spec.nodes.as_deref().unwrap_or(&[]), &[x])?.row(0))
        }
    }
    Ok(())
}

fn check_permutation(order: &[usize], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    for &p in order {
        if p >= d || std::mem::replace(&mut seen[p], true) {
            return Err(SttError::Configuration(format!("{order:?} is not a permutation of 0..{d}")));
        }
    }
    if order.len() != d {
        return Err(SttError::Configuration(format!("{order:?} is not a permutation of 0..{d}")));
    }
    Ok(())
}

/// Sample `f` on `grid` (weighted unless `weighted` is false) and return the
/// unweighted value cores in train order.
fn sample_train<F>(
    f: &F,
    grid: &GridSpec,
    opts: &BuildOptions,
    ledger: &mut EvalLedger,
) -> Result<(Vec<Core>, Vec<usize>, BuildInfo)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let start = Instant::now();
    let d = grid.ndim();
    let order = match &opts.permutation {
        Some(p) => {
            check_permutation(p, d)?;
            p.clone()
        }
        None => (0..d).collect(),
    };
    let mut model = WeightedModel::with_order(f, grid, order.clone())?;
    model.parallel = opts.parallel;
    let shape: Vec<usize> = order.iter().map(|&k| grid.axes[k].len()).collect();
    let before = ledger.eval_count();

    let (mut cores, sweeps, converged) = if d == 1 {
        opts.cross.validate()?;
        let idx: Vec<Vec<usize>> = (0..shape[0]).map(|i| vec![i]).collect();
        let vals = ledger.fetch(&idx, &mut |b: &[Vec<usize>]| model.eval_batch(b))?;
        (vec![Core::new(1, shape[0], 1, vals)?], 0, true)
    } else {
        let mut cb = |b: &[Vec<usize>]| model.eval_batch(b);
        let out = if opts.quantics {
            cross_on_quantics(&shape, &mut cb, &opts.cross, 2, ledger)?
        } else {
            dmrg_cross(&shape, &mut cb, &opts.cross, ledger)?
        };
        (out.tt.into_cores(), out.sweeps, out.converged)
    };
    model.unweight(&mut cores);
    let info = BuildInfo {
        eps: opts.cross.eps,
        seed: opts.cross.seed,
        eval_count: ledger.eval_count() - before,
        sweeps,
        converged,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((cores, order, info))
}

/// Projection surrogate from a grid of Gauss rules with `degrees[k] + 1`
/// nodes on dimension `k`.
pub fn ftt_projection_construct<F>(f: &F, grid: &GridSpec, degrees: &[usize], opts: &BuildOptions) -> Result<Surrogate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    ftt_projection_construct_with_ledger(f, grid, degrees, opts, &mut EvalLedger::new())
}

pub fn ftt_projection_construct_with_ledger<F>(
    f: &F,
    grid: &GridSpec,
    degrees: &[usize],
    opts: &BuildOptions,
    ledger: &mut EvalLedger,
) -> Result<Surrogate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if degrees.len() != grid.ndim() {
        return Err(SttError::Configuration("one degree per grid dimension required".into()));
    }
    let mut basis = Vec::with_capacity(grid.ndim());
    for (ax, &n) in grid.axes.iter().zip(degrees) {
        if ax.len() != n + 1 {
            return Err(SttError::Configuration(format!(
                "degree {n} needs {} quadrature nodes, grid has {}",
                n + 1,
                ax.len()
            )));
        }
        if ax.weights.is_none() {
            return Err(SttError::Configuration("projection needs quadrature weights".into()));
        }
        basis.push(BasisSpec::orthonormal(family_for(ax.domain), n, ax.domain));
    }
    let (cores, order, info) = sample_train(f, grid, opts, ledger)?;
    // β̂(α, j, β) = Σ_i G(α, i, β) φ_j(x_i) w_i
    let cores = cores
        .iter()
        .enumerate()
        .map(|(k, core)| {
            let dim = order[k];
            let ax = &grid.axes[dim];
            let w = ax.weights.as_ref().expect("checked above");
            let spec = &basis[dim];
            let mut m = Matrix::zeros(spec.size(), ax.len());
            let mut phi = Vec::new();
            for (i, (&x, &wi)) in ax.nodes.iter().zip(w).enumerate() {
                basis_row(spec, x, &mut phi)?;
                for (j, p) in phi.iter().enumerate() {
                    m[(j, i)] = p * wi;
                }
            }
            Ok(core.apply_mode_matrix(&m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Surrogate { mode: SurrogateMode::Projection, cores, basis, order, info })
}

pub fn ftt_projection_eval(s: &Surrogate, points: &Matrix) -> Result<Vec<f64>> {
    if s.mode != SurrogateMode::Projection {
        return Err(SttError::Configuration("not a projection surrogate".into()));
    }
    s.eval(points)
}

/// Interpolation surrogate from the values of `f` on `grid`.
///
/// Weighting is skipped for linear mode when every axis is equispaced, since
/// there the trapezoid weights are uniform in the interior and the train can
/// be built on the values directly.
pub fn ftt_interpolation_construct<F>(f: &F, grid: &GridSpec, mode: SurrogateMode, opts: &BuildOptions) -> Result<Surrogate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    ftt_interpolation_construct_with_ledger(f, grid, mode, opts, &mut EvalLedger::new())
}

pub fn ftt_interpolation_construct_with_ledger<F>(
    f: &F,
    grid: &GridSpec,
    mode: SurrogateMode,
    opts: &BuildOptions,
    ledger: &mut EvalLedger,
) -> Result<Surrogate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let basis = grid
        .axes
        .iter()
        .map(|ax| {
            let spec = match mode {
                SurrogateMode::LinearInterp => {
                    if ax.nodes.windows(2).any(|w| !(w[0] < w[1])) {
                        return invalid("linear interpolation needs strictly ascending nodes");
                    }
                    BasisSpec::hat(ax.nodes.clone(), ax.domain)
                }
                SurrogateMode::LagrangeInterp => {
                    // Rejects duplicate nodes.
                    lagrange_matrix(&ax.nodes, &ax.nodes[..1])?;
                    BasisSpec::lagrange(ax.nodes.clone(), family_for(ax.domain), ax.domain)
                }
                SurrogateMode::Projection => {
                    return Err(SttError::Configuration("use ftt_projection_construct for projection".into()))
                }
            };
            Ok(spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let skip = mode == SurrogateMode::LinearInterp && grid.axes.iter().all(GridAxis::is_equispaced);
    let plain;
    let grid = if skip {
        plain = grid.without_weights();
        &plain
    } else {
        grid
    };
    let (cores, order, info) = sample_train(f, grid, opts, ledger)?;
    Ok(Surrogate { mode, cores, basis, order, info })
}

pub fn ftt_interpolation_eval(s: &Surrogate, points: &Matrix) -> Result<Vec<f64>> {
    if s.mode == SurrogateMode::Projection {
        return Err(SttError::Configuration("not an interpolation surrogate".into()));
    }
    s.eval(points)
}
