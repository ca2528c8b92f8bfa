//! Benchmark drivers producing one CSV row per build.

use std::io::Write;

use serde::Serialize;

use super::error::{ErrorEstimate, MonteCarloSet};
use super::genz::{genz_make, genz_sample, GenzFamily};
use super::pde::{hermite_axes, kl_build, PoissonModel};
use super::probes::{bump, FourierProbe};
use crate::error::{invalid, Result, SttError};
use crate::linalg::Matrix;
use crate::quadrature::Domain;
use crate::stt::{
    ftt_interpolation_construct, ftt_projection_construct, BuildOptions, GridSpec, Surrogate, SurrogateMode,
};
use crate::tt::{increment, tt_eval};

pub const CSV_HEADER: [&str; 8] =
    ["d", "degree_or_gridsize", "eps", "eval_count", "max_rank", "rel_l2", "rel_l2_se", "seconds"];

/// One build and its measured error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub d: usize,
    pub degree_or_gridsize: usize,
    pub eps: f64,
    pub eval_count: usize,
    pub max_rank: usize,
    pub rel_l2: f64,
    pub rel_l2_se: f64,
    /// Wall time of the build, excluding error estimation.
    pub seconds: f64,
}

impl BenchRow {
    fn new(d: usize, level: usize, eps: f64, s: &Surrogate, err: ErrorEstimate) -> Self {
        BenchRow {
            d,
            degree_or_gridsize: level,
            eps,
            eval_count: s.info.eval_count,
            max_rank: s.max_rank(),
            rel_l2: err.rel_l2,
            rel_l2_se: err.std_error,
            seconds: s.info.seconds,
        }
    }
}

/// Write rows with a header. With `timings` off the `seconds` column is
/// zeroed so that the output is byte-stable for a fixed seed.
pub fn write_csv<W: Write>(rows: &[BenchRow], sink: W, timings: bool) -> Result<()> {
    // The header is written explicitly so that an empty table still has one.
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    let fail = |e: csv::Error| SttError::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(fail)?;
    for r in rows {
        let r = BenchRow { seconds: if timings { r.seconds } else { 0.0 }, ..r.clone() };
        w.serialize(&r).map_err(fail)?;
    }
    w.flush()?;
    Ok(())
}

/// Monte Carlo sample sizing: start with `start` points and double until the
/// standard error is at most `target_rel_se` of the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub start: usize,
    pub max: usize,
    pub target_rel_se: f64,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { start: 1000, max: 64_000, target_rel_se: 1e-2, seed: 7919 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenzSuite {
    pub family: GenzFamily,
    pub modified: bool,
    pub dims: Vec<usize>,
    /// Polynomial degrees for projection and Lagrange modes, points per
    /// dimension for linear mode.
    pub levels: Vec<usize>,
    pub mode: SurrogateMode,
    pub build: BuildOptions,
    pub mc: McSettings,
}

pub fn run_genz(suite: &GenzSuite) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &d in &suite.dims {
        let spec = genz_sample(suite.family, d, suite.modified, suite.build.cross.seed)?;
        let f = genz_make(&spec);
        let domains = vec![Domain::unit(); d];
        let mut mc = MonteCarloSet::new(&f, &domains, suite.mc.start, suite.mc.seed);
        for &level in &suite.levels {
            let s = match suite.mode {
                SurrogateMode::Projection => {
                    let grid = GridSpec::gauss(&vec![level; d], &domains)?;
                    ftt_projection_construct(&f, &grid, &vec![level; d], &suite.build)?
                }
                SurrogateMode::LagrangeInterp => {
                    let grid = GridSpec::gauss(&vec![level; d], &domains)?;
                    ftt_interpolation_construct(&f, &grid, SurrogateMode::LagrangeInterp, &suite.build)?
                }
                SurrogateMode::LinearInterp => {
                    let grid = GridSpec::equispaced(&vec![level; d], &domains)?;
                    ftt_interpolation_construct(&f, &grid, SurrogateMode::LinearInterp, &suite.build)?
                }
            };
            let err = mc.rel_error_adaptive(&f, &s, suite.mc.target_rel_se, suite.mc.max)?;
            rows.push(BenchRow::new(d, level, suite.build.cross.eps, &s, err));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierSuite {
    pub probe: FourierProbe,
    /// Projection degree on every dimension.
    pub degree: usize,
    pub build: BuildOptions,
    pub mc: McSettings,
}

impl FourierSuite {
    /// The coupled probe with `Σ = [[1, -0.9], [-0.9, 1]]` on dimensions
    /// `dims` of `[-1, 1]^d`, degree 15.
    pub fn coupled_pair(d: usize, dims: [usize; 2]) -> Result<Self> {
        let sigma = Matrix::from_rows(&[vec![1.0, -0.9], vec![-0.9, 1.0]])?;
        Ok(Self {
            probe: FourierProbe::coupled(d, dims.to_vec(), 15, sigma)?,
            degree: 15,
            build: BuildOptions::default(),
            mc: McSettings::default(),
        })
    }
}

/// Returns the row and the surrogate (whose rank profile is the point of this
/// suite).
pub fn run_fourier(suite: &FourierSuite) -> Result<(BenchRow, Surrogate)> {
    let d = suite.probe.dim();
    let domains = vec![Domain::symmetric(); d];
    let f = |x: &[f64]| suite.probe.eval(x);
    let grid = GridSpec::gauss(&vec![suite.degree; d], &domains)?;
    let s = ftt_projection_construct(&f, &grid, &vec![suite.degree; d], &suite.build)?;
    let mut mc = MonteCarloSet::new(&f, &domains, suite.mc.start, suite.mc.seed);
    let err = mc.rel_error_adaptive(&f, &s, suite.mc.target_rel_se, suite.mc.max)?;
    Ok((BenchRow::new(d, suite.degree, suite.build.cross.eps, &s, err), s))
}

/// The Gaussian bump on a uniform grid of `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSuite {
    pub x0: Vec<f64>,
    pub l: f64,
    pub grid: usize,
    pub build: BuildOptions,
}

impl Default for FeatureSuite {
    fn default() -> Self {
        Self { x0: vec![0.2, 0.2], l: 0.05, grid: 32, build: BuildOptions::default() }
    }
}

/// The error column is the exact discrete relative error over the whole grid
/// (standard error zero), so grids are limited to 10^7 points.
pub fn run_feature(suite: &FeatureSuite) -> Result<(BenchRow, Surrogate)> {
    let d = suite.x0.len();
    let total = (suite.grid as f64).powi(d as i32);
    if total > 1e7 {
        return Err(SttError::Resource(format!("{total} grid points exceed the dense error check")));
    }
    let f = bump(suite.x0.clone(), suite.l)?;
    let grid = GridSpec::equispaced(&vec![suite.grid; d], &vec![Domain::unit(); d])?;
    let s = ftt_interpolation_construct(&f, &grid, SurrogateMode::LinearInterp, &suite.build)?;
    let tt = s.train()?;
    let shape = grid.shape();
    let (mut num, mut den) = (0.0, 0.0);
    let mut idx = vec![0usize; d];
    let mut train_idx = vec![0usize; d];
    for _ in 0..total as usize {
        let x: Vec<f64> = idx.iter().zip(&grid.axes).map(|(&i, ax)| ax.nodes[i]).collect();
        for (k, &dim) in s.order.iter().enumerate() {
            train_idx[k] = idx[dim];
        }
        let exact = f(&x);
        num += (exact - tt_eval(&tt, &train_idx)?).powi(2);
        den += exact * exact;
        increment(&mut idx, &shape);
    }
    let err = ErrorEstimate { rel_l2: (num / den).sqrt(), std_error: 0.0, samples: total as usize };
    Ok((BenchRow::new(d, suite.grid, suite.build.cross.eps, &s, err), s))
}

/// Projection of `y ↦ u(x0, y)` for the log-normal diffusion problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSuite {
    pub sigma2: f64,
    pub l: f64,
    /// Points per side of the KL Nyström grid.
    pub kl_grid: usize,
    pub mesh: usize,
    pub x0: [f64; 2],
    pub degrees: Vec<usize>,
    pub build: BuildOptions,
    pub mc: McSettings,
}

impl Default for PdeSuite {
    fn default() -> Self {
        Self {
            sigma2: 0.1,
            l: 0.25,
            kl_grid: 65,
            mesh: 64,
            x0: [0.75, 0.25],
            degrees: vec![0, 1, 3],
            build: BuildOptions { parallel: true, ..BuildOptions::with_eps(1e-3) },
            mc: McSettings { start: 2000, max: 32_000, ..McSettings::default() },
        }
    }
}

pub fn run_pde(suite: &PdeSuite) -> Result<Vec<BenchRow>> {
    if suite.degrees.is_empty() {
        return invalid("no degrees requested");
    }
    let kl = kl_build(suite.sigma2, suite.l, suite.kl_grid, 0.95)?;
    let model = PoissonModel::new(&kl, suite.mesh, suite.x0)?;
    let d = model.dim();
    let f = |y: &[f64]| model.qoi(y).unwrap_or(f64::NAN);
    let mut mc = MonteCarloSet::new(&f, &vec![Domain::RealLine; d], suite.mc.start, suite.mc.seed);
    if mc.values.iter().any(|v| !v.is_finite()) {
        return Err(SttError::NumericalFailure("PDE solve failed on a Monte Carlo sample".into()));
    }
    let mut rows = Vec::new();
    for &n in &suite.degrees {
        let grid = GridSpec::new(hermite_axes(d, n)?)?;
        let s = ftt_projection_construct(&f, &grid, &vec![n; d], &suite.build)?;
        let err = mc.rel_error_adaptive(&f, &s, suite.mc.target_rel_se, suite.mc.max)?;
        rows.push(BenchRow::new(d, n, suite.build.cross.eps, &s, err));
    }
    Ok(rows)
}
