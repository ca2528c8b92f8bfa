//! Rank-revealing sampled construction of tensor trains.
//!
//! [`maxvol`] picks well-conditioned pivot rows, [`skeleton`] is the matrix
//! cross approximation built from them, and [`dmrg_cross`] sweeps over pairs
//! of neighbouring cores ("supercores"), evaluating only the fibres selected
//! by the current left/right index sets. Every black-box value goes through
//! an [`EvalLedger`], which caches by multi-index and counts true calls.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result, SttError};
use crate::linalg::{qr_thin, right_solve, svd, truncation_rank, Matrix};
use crate::tt::{eval_unchecked, quantics_fold, tt_norm_f, tt_round, Core, QuanticsMap, TTTensor};

/// Pivot rows returned by [`maxvol`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Maxvol {
    pub rows: Vec<usize>,
    pub iterations: usize,
    /// False when the iteration cap stopped the search before dominance.
    pub converged: bool,
}

/// Rows of a tall `n × r` matrix whose submatrix is dominant: every entry of
/// `A·A(I,:)⁻¹` has modulus at most `1 + tol`.
pub fn maxvol(a: &Matrix, tol: f64, max_iters: usize) -> Result<Maxvol> {
    let (n, r) = (a.rows(), a.cols());
    if r == 0 || n < r {
        return invalid(format!("maxvol needs a tall matrix, got {n}x{r}"));
    }
    if !a.is_finite() {
        return invalid("maxvol of non-finite matrix");
    }
    // Starting rows from Gaussian elimination with partial pivoting.
    let mut work = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.max_abs();
    for k in 0..r {
        let (p, pmax) = (k..n)
            .map(|i| (i, work[(i, k)].abs()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(pmax > scale * 1e-14) {
            return Err(SttError::NumericalFailure(format!("maxvol: matrix is rank deficient at column {k}")));
        }
        if p != k {
            for j in 0..r {
                let t = work[(k, j)];
                work[(k, j)] = work[(p, j)];
                work[(p, j)] = t;
            }
            perm.swap(k, p);
        }
        let piv = work[(k, k)];
        for i in (k + 1)..n {
            let f = work[(i, k)] / piv;
            if f != 0.0 {
                for j in k..r {
                    work[(i, j)] -= f * work[(k, j)];
                }
            }
        }
    }
    let mut rows: Vec<usize> = perm[..r].to_vec();
    let mut b = right_solve(a, &a.select_rows(&rows))?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let (mut bi, mut bj, mut bmax) = (0, 0, 0.0);
        for i in 0..n {
            for (j, &x) in b.row(i).iter().enumerate() {
                if x.abs() > bmax {
                    (bi, bj, bmax) = (i, j, x.abs());
                }
            }
        }
        if bmax <= 1.0 + tol {
            converged = true;
            break;
        }
        iterations += 1;
        rows[bj] = bi;
        let col: Vec<f64> = b.col(bj);
        let mut rowv = b.row(bi).to_vec();
        rowv[bj] -= 1.0;
        let piv = b[(bi, bj)];
        for i in 0..n {
            let f = col[i] / piv;
            if f != 0.0 {
                for (x, &y) in b.row_mut(i).iter_mut().zip(&rowv) {
                    *x -= f * y;
                }
            }
        }
    }
    if !converged {
        // The loop may exit on the cap right after the last swap.
        converged = b.max_abs() <= 1.0 + tol;
    }
    Ok(Maxvol { rows, iterations, converged })
}

/// Cross approximation `A(:,J) A(I,J)⁻¹ A(I,:)`.
pub fn skeleton(a: &Matrix, rows: &[usize], cols: &[usize]) -> Result<Matrix> {
    if rows.len() != cols.len() || rows.is_empty() {
        return invalid("skeleton needs equally many (nonzero) row and column pivots");
    }
    if rows.iter().any(|&i| i >= a.rows()) || cols.iter().any(|&j| j >= a.cols()) {
        return invalid("skeleton pivot out of range");
    }
    let core = a.select_rows(rows).select_cols(cols);
    let c = a.select_cols(cols);
    let left = right_solve(&c, &core)?;
    Ok(left.matmul(&a.select_rows(rows)))
}

/// Cache and counter of black-box evaluations.
#[derive(Debug, Clone, Default)]
pub struct EvalLedger {
    cache: HashMap<Vec<usize>, f64>,
    eval_count: usize,
    /// Maximum number of indices handed to the callback at once; 0 means
    /// unlimited.
    pub batch_size: usize,
}

impl EvalLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_batch_size(batch_size: usize) -> Self {
        Self { batch_size, ..Self::default() }
    }

    /// Number of times the black box has been evaluated.
    pub fn eval_count(&self) -> usize {
        self.eval_count
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    pub fn get(&self, idx: &[usize]) -> Option<f64> {
        self.cache.get(idx).copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.cache.keys()
    }

    /// Values at `indices`, invoking `f` only on cache misses (deduplicated).
    pub fn fetch<F>(&mut self, indices: &[Vec<usize>], f: &mut F) -> Result<Vec<f64>>
    where
        F: FnMut(&[Vec<usize>]) -> Vec<f64>,
    {
        let mut missing: Vec<Vec<usize>> = Vec::new();
        {
            let mut seen = std::collections::HashSet::new();
            for idx in indices {
                if !self.cache.contains_key(idx) && seen.insert(idx.as_slice()) {
                    missing.push(idx.clone());
                }
            }
        }
        let chunk = if self.batch_size == 0 { missing.len().max(1) } else { self.batch_size };
        for batch in missing.chunks(chunk) {
            let values = f(batch);
            if values.len() != batch.len() {
                return invalid(format!("callback returned {} values for {} indices", values.len(), batch.len()));
            }
            for (idx, v) in batch.iter().zip(values) {
                if !v.is_finite() {
                    return invalid(format!("black box returned {v} at {idx:?}"));
                }
                self.cache.insert(idx.clone(), v);
            }
            self.eval_count += batch.len();
        }
        Ok(indices.iter().map(|i| self.cache[i]).collect())
    }

    /// Write the cache as text: indices, then the value's IEEE bits in hex.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        let mut entries: Vec<_> = self.cache.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        for (idx, v) in entries {
            let idx: Vec<String> = idx.iter().map(usize::to_string).collect();
            writeln!(w, "{} {:016x}", idx.join(","), v.to_bits())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Merge a cache written by [`save`](Self::save). Loaded entries do not
    /// count as evaluations.
    pub fn load(&mut self, path: &Path) -> Result<usize> {
        let r = BufReader::new(fs::File::open(path)?);
        let mut n = 0;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let bad = || SttError::Format(format!("{}:{}: bad cache line", path.display(), lineno + 1));
            let (idx, bits) = line.split_once(' ').ok_or_else(bad)?;
            let idx = if idx.is_empty() {
                Vec::new()
            } else {
                idx.split(',').map(|s| s.parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|_| bad())?
            };
            let bits = u64::from_str_radix(bits, 16).map_err(|_| bad())?;
            self.cache.insert(idx, f64::from_bits(bits));
            n += 1;
        }
        Ok(n)
    }
}

/// Parameters of the DMRG cross engine.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossConfig {
    /// Target relative accuracy `‖A − A_TT‖_F ≤ eps‖A‖_F`.
    pub eps: f64,
    pub max_sweeps: usize,
    pub initial_rank: usize,
    /// Per-sweep growth factor: a bond of rank `r` may reach `kickrank·r + 1`.
    pub kickrank: usize,
    /// Random directions added to each supercore basis to explore fibres the
    /// SVD did not ask for. Costs extra evaluations; off by default.
    pub enrichment: usize,
    /// Random entries used to check a converged train. When the sampled
    /// error exceeds `eps`, sweeping resumes with enrichment switched on,
    /// which catches couplings the index sets never exposed (for example
    /// between distant dimensions).
    pub validation_samples: usize,
    pub maxvol_tol: f64,
    pub maxvol_max_iters: usize,
    pub rank_cap: usize,
    pub seed: u64,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            eps: 1e-10,
            max_sweeps: 10,
            initial_rank: 1,
            kickrank: 2,
            enrichment: 0,
            validation_samples: 20,
            maxvol_tol: 5e-2,
            maxvol_max_iters: 100,
            rank_cap: 100,
            seed: 0,
        }
    }
}

impl CrossConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(SttError::Configuration(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_sweeps == 0 || self.initial_rank == 0 || self.rank_cap == 0 || self.maxvol_max_iters == 0 {
            return Err(SttError::Configuration("sweep, rank and iteration caps must be >= 1".into()));
        }
        if !(self.maxvol_tol >= 0.0) {
            return Err(SttError::Configuration("maxvol tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Result of a cross run that produced a tensor train.
#[derive(Debug, Clone)]
pub struct CrossOutcome {
    pub tt: TTTensor,
    /// False when `max_sweeps` ran out before the stopping rule was met.
    pub converged: bool,
    pub sweeps: usize,
    /// Largest relative supercore discrepancy in the final sweep.
    pub last_change: f64,
}

/// DMRG cross approximation of the tensor defined by `f` on `shape`.
///
/// `f` receives batches of multi-indices and returns one value per index; it
/// may evaluate the batch concurrently. Half of the accuracy budget drives the
/// sweeps and the other half a final recompression, so the returned ranks are
/// minimal for the sampled tensor.
pub fn dmrg_cross<F>(shape: &[usize], f: &mut F, cfg: &CrossConfig, ledger: &mut EvalLedger) -> Result<CrossOutcome>
where
    F: FnMut(&[Vec<usize>]) -> Vec<f64>,
{
    cfg.validate()?;
    if shape.is_empty() || shape.contains(&0) {
        return invalid(format!("invalid shape {shape:?}"));
    }
    let raw = Engine::new(shape.to_vec(), None, f, cfg, ledger).run()?;
    finish(raw, cfg, None)
}

/// DMRG cross on the base-`base` quantics folding of `shape`, merged back to
/// the physical shape. Falls back to [`dmrg_cross`] when some mode is not a
/// power of `base`. The ledger is keyed by physical indices.
pub fn cross_on_quantics<F>(
    shape: &[usize],
    f: &mut F,
    cfg: &CrossConfig,
    base: usize,
    ledger: &mut EvalLedger,
) -> Result<CrossOutcome>
where
    F: FnMut(&[Vec<usize>]) -> Vec<f64>,
{
    cfg.validate()?;
    let map = match quantics_fold(shape, base) {
        Ok(m) => m,
        Err(SttError::Configuration(_)) => return dmrg_cross(shape, f, cfg, ledger),
        Err(e) => return Err(e),
    };
    let raw = Engine::new(map.folded_shape(), Some(&map), f, cfg, ledger).run()?;
    finish(raw, cfg, Some(&map))
}

fn finish(raw: RawOutcome, cfg: &CrossConfig, map: Option<&QuanticsMap>) -> Result<CrossOutcome> {
    let tt = match map {
        Some(m) => m.merge(&raw.tt)?,
        None => raw.tt,
    };
    let tt = tt_round(&tt, 0.5 * cfg.eps)?;
    if raw.cap_hit {
        return Err(SttError::RankCapReached { cap: cfg.rank_cap, best: Box::new(tt) });
    }
    Ok(CrossOutcome { tt, converged: raw.converged, sweeps: raw.sweeps, last_change: raw.last_change })
}

struct RawOutcome {
    tt: TTTensor,
    converged: bool,
    sweeps: usize,
    last_change: f64,
    cap_hit: bool,
}

/// Sweep state. `left[k]` holds prefixes `(i_0..i_{k-1})` for bond `k`,
/// `right[k]` suffixes `(i_k..i_{d-1})`; `|left[k]| = |right[k]| = r_k`.
struct Engine<'a, F> {
    shape: Vec<usize>,
    map: Option<&'a QuanticsMap>,
    f: &'a mut F,
    cfg: &'a CrossConfig,
    ledger: &'a mut EvalLedger,
    rng: ChaCha8Rng,
    left: Vec<Vec<Vec<usize>>>,
    right: Vec<Vec<Vec<usize>>>,
    cores: Vec<Core>,
    /// Complete train from the previous half sweep.
    snapshot: Option<TTTensor>,
    norm_estimate: f64,
    eps: f64,
    enrichment: usize,
    cap_hit: bool,
}

/// Validation rounds after the first convergence.
const MAX_RESTARTS: usize = 10;
/// Worst validation samples promoted to pivots per round.
const INJECTED_PIVOTS: usize = 4;

impl<'a, F> Engine<'a, F>
where
    F: FnMut(&[Vec<usize>]) -> Vec<f64>,
{
    fn new(
        shape: Vec<usize>,
        map: Option<&'a QuanticsMap>,
        f: &'a mut F,
        cfg: &'a CrossConfig,
        ledger: &'a mut EvalLedger,
    ) -> Self {
        let d = shape.len();
        Self {
            cores: shape.iter().map(|&n| Core::zeros(1, n, 1)).collect(),
            shape,
            map,
            f,
            cfg,
            ledger,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            left: vec![Vec::new(); d + 1],
            right: vec![Vec::new(); d + 1],
            snapshot: None,
            norm_estimate: 0.0,
            eps: 0.5 * cfg.eps,
            enrichment: cfg.enrichment,
            cap_hit: false,
        }
    }

    fn d(&self) -> usize {
        self.shape.len()
    }

    /// Largest rank bond `k` can carry.
    fn bond_limit(&self, k: usize) -> usize {
        let sat = |it: &[usize]| it.iter().fold(1usize, |a, &n| a.saturating_mul(n));
        sat(&self.shape[..k]).min(sat(&self.shape[k..]))
    }

    fn fetch(&mut self, indices: &[Vec<usize>]) -> Result<Vec<f64>> {
        match self.map {
            None => self.ledger.fetch(indices, self.f),
            Some(m) => {
                let phys: Vec<Vec<usize>> = indices.iter().map(|i| m.unfold_unchecked(i)).collect();
                self.ledger.fetch(&phys, self.f)
            }
        }
    }

    fn run(mut self) -> Result<RawOutcome> {
        let d = self.d();
        if d == 1 {
            let idx: Vec<Vec<usize>> = (0..self.shape[0]).map(|i| vec![i]).collect();
            let vals = self.fetch(&idx)?;
            let tt = TTTensor::new(vec![Core::new(1, self.shape[0], 1, vals)?])?;
            return Ok(RawOutcome { tt, converged: true, sweeps: 1, last_change: 0.0, cap_hit: false });
        }
        self.init_right_sets();
        self.left[0] = vec![Vec::new()];
        let mut converged;
        let mut sweeps = 0;
        let mut last_change = f64::INFINITY;
        let mut restarts = 0;
        loop {
            converged = false;
            let mut local = 0;
            while local < self.cfg.max_sweeps {
                sweeps += 1;
                local += 1;
                self.cap_hit = false;
                let start_ranks: Vec<usize> = (0..=d).map(|k| self.right[k].len().max(1)).collect();
                let c1 = self.half_sweep(true, &start_ranks)?;
                let c2 = self.half_sweep(false, &start_ranks)?;
                last_change = c1.max(c2);
                if sweeps >= 2 && last_change <= self.eps {
                    converged = true;
                    break;
                }
            }
            if restarts == MAX_RESTARTS {
                break;
            }
            let (err, worst) = self.validation_error()?;
            if err <= self.eps {
                break;
            }
            restarts += 1;
            self.inject_pivots(&worst);
            self.enrichment = self.enrichment.max(self.cfg.kickrank.max(1));
        }
        let tt = self.snapshot.take().expect("at least one sweep ran");
        Ok(RawOutcome { tt, converged, sweeps, last_change, cap_hit: self.cap_hit })
    }

    /// Relative Frobenius error of the current train estimated from random
    /// entries: the mean squared error over uniform samples is an unbiased
    /// estimate of `‖E‖²_F / N`. Also returns the worst sampled indices.
    fn validation_error(&mut self) -> Result<(f64, Vec<Vec<usize>>)> {
        let k = self.cfg.validation_samples;
        if k == 0 {
            return Ok((0.0, Vec::new()));
        }
        let idx: Vec<Vec<usize>> =
            (0..k).map(|_| self.shape.iter().map(|&n| self.rng.gen_range(0..n)).collect()).collect();
        let vals = self.fetch(&idx)?;
        let tt = self.snapshot.as_ref().expect("validated after a sweep");
        let errs: Vec<f64> = idx.iter().zip(&vals).map(|(i, v)| (v - eval_unchecked(tt, i)).abs()).collect();
        let rms_err = (errs.iter().map(|e| e * e).sum::<f64>() / k as f64).sqrt();
        let half_log_n: f64 = 0.5 * self.shape.iter().map(|&n| (n as f64).ln()).sum::<f64>();
        let rms = tt_norm_f(tt) / half_log_n.exp();
        let rel = if rms > 0.0 {
            rms_err / rms
        } else if rms_err > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| errs[b].total_cmp(&errs[a]));
        let worst = order.into_iter().take(INJECTED_PIVOTS).filter(|&i| errs[i] > 0.0).map(|i| idx[i].clone()).collect();
        Ok((rel, worst))
    }

    /// Add the suffixes of `samples` to every right index set. Suffixes of
    /// one sample are nested, so the sets stay nested; the next left to right
    /// sweep then sees the entries the train got wrong.
    fn inject_pivots(&mut self, samples: &[Vec<usize>]) {
        for idx in samples {
            for k in 1..self.d() {
                let suffix = idx[k..].to_vec();
                if self.right[k].len() < self.bond_limit(k).min(self.cfg.rank_cap) && !self.right[k].contains(&suffix) {
                    self.right[k].push(suffix);
                }
            }
        }
    }

    fn init_right_sets(&mut self) {
        let d = self.d();
        self.right[d] = vec![Vec::new()];
        for k in (1..d).rev() {
            let r = self.cfg.initial_rank.min(self.bond_limit(k));
            let mut set: Vec<Vec<usize>> = Vec::with_capacity(r);
            let mut attempts = 0;
            while set.len() < r && attempts < 100 * r {
                attempts += 1;
                let i = self.rng.gen_range(0..self.shape[k]);
                let b = self.rng.gen_range(0..self.right[k + 1].len());
                let mut idx = vec![i];
                idx.extend_from_slice(&self.right[k + 1][b]);
                if !set.contains(&idx) {
                    set.push(idx);
                }
            }
            self.right[k] = set;
        }
    }

    /// Supercore `W` on bonds `k`, `k+2` as an `(r_k n_k) × (n_{k+1} r_{k+2})`
    /// matrix, plus its prediction by the previous train when available.
    fn supercore(&mut self, k: usize) -> Result<(Matrix, Option<Matrix>)> {
        let (n1, n2) = (self.shape[k], self.shape[k + 1]);
        let (ls, rs) = (&self.left[k], &self.right[k + 2]);
        let (rl, rr) = (ls.len(), rs.len());
        let mut indices = Vec::with_capacity(rl * n1 * n2 * rr);
        for l in ls {
            for i in 0..n1 {
                for j in 0..n2 {
                    for r in rs {
                        let mut idx = Vec::with_capacity(self.shape.len());
                        idx.extend_from_slice(l);
                        idx.push(i);
                        idx.push(j);
                        idx.extend_from_slice(r);
                        indices.push(idx);
                    }
                }
            }
        }
        let values = self.fetch(&indices)?;
        let w = Matrix::from_vec(rl * n1, n2 * rr, values)?;
        let predicted = self.snapshot.as_ref().map(|tt| predict(tt, k, &self.left[k], &self.right[k + 2]));
        Ok((w, predicted))
    }

    fn half_sweep(&mut self, left_to_right: bool, start_ranks: &[usize]) -> Result<f64> {
        let d = self.d();
        let mut worst: f64 = if self.snapshot.is_none() { f64::INFINITY } else { 0.0 };
        let order: Vec<usize> = if left_to_right { (0..d - 1).collect() } else { (0..d - 1).rev().collect() };
        for k in order {
            let (w, predicted) = self.supercore(k)?;
            let wn = w.frobenius_norm();
            self.norm_estimate = self.norm_estimate.max(wn);
            if let Some(p) = predicted {
                let diff = w.sub(&p).frobenius_norm();
                let change = if wn > 0.0 { diff / wn } else if diff > 0.0 { f64::INFINITY } else { 0.0 };
                worst = worst.max(change);
            }
            let (n1, n2) = (self.shape[k], self.shape[k + 1]);
            let (rl, rr) = (self.left[k].len(), self.right[k + 2].len());

            let full = svd(&w)?;
            // Half the sweep budget, so truncation noise stays below the
            // stopping threshold.
            let delta = 0.5 * self.eps * self.norm_estimate / ((d - 1) as f64).sqrt();
            let mut keep = truncation_rank(&full.s, delta).max(1);
            if keep > self.cfg.rank_cap {
                self.cap_hit = true;
                keep = self.cfg.rank_cap;
            }
            let growth = self.cfg.kickrank.max(1) * start_ranks[k + 1] + 1;
            keep = keep.min(growth);
            let limit = growth.min(w.rows()).min(w.cols()).min(self.bond_limit(k + 1)).min(self.cfg.rank_cap.max(keep));
            let target = (keep + self.enrichment).min(limit).max(keep);
            let s = full.truncate(keep);

            if left_to_right {
                let basis = self.kick(&s.u, target)?;
                let piv = maxvol(&basis, self.cfg.maxvol_tol, self.cfg.maxvol_max_iters)?.rows;
                let interp = right_solve(&basis, &basis.select_rows(&piv))?;
                self.cores[k] = Core::from_left_unfolding(interp, rl, n1);
                // Rows of the truncated supercore at the pivots.
                let next = s.u.select_rows(&piv).scale_cols(&s.s).matmul(&s.v.transpose());
                self.cores[k + 1] = Core::from_right_unfolding(next, n2);
                self.left[k + 1] = piv
                    .iter()
                    .map(|&p| {
                        let mut idx = self.left[k][p / n1].clone();
                        idx.push(p % n1);
                        idx
                    })
                    .collect();
            } else {
                let basis = self.kick(&s.v, target)?;
                let piv = maxvol(&basis, self.cfg.maxvol_tol, self.cfg.maxvol_max_iters)?.rows;
                let interp = right_solve(&basis, &basis.select_rows(&piv))?;
                self.cores[k + 1] = Core::from_right_unfolding(interp.transpose(), n2);
                let prev = s.u.scale_cols(&s.s).matmul(&s.v.select_rows(&piv).transpose());
                self.cores[k] = Core::from_left_unfolding(prev, rl, n1);
                self.right[k + 1] = piv
                    .iter()
                    .map(|&p| {
                        let mut idx = vec![p / rr];
                        idx.extend_from_slice(&self.right[k + 2][p % rr]);
                        idx
                    })
                    .collect();
            }
        }
        self.snapshot = Some(TTTensor::new(self.cores.clone())?);
        Ok(worst)
    }

    /// Extend an orthonormal basis with random directions up to `target`
    /// columns.
    fn kick(&mut self, basis: &Matrix, target: usize) -> Result<Matrix> {
        let extra = target.saturating_sub(basis.cols());
        if extra == 0 {
            return Ok(basis.clone());
        }
        let noise = Matrix::from_fn(basis.rows(), extra, |_, _| self.rng.gen_range(-1.0..1.0));
        let (q, _) = qr_thin(&basis.hstack(&noise))?;
        Ok(q)
    }
}

/// Values of `tt` on the supercore grid `left × n_k × n_{k+1} × right`.
fn predict(tt: &TTTensor, k: usize, left: &[Vec<usize>], right: &[Vec<usize>]) -> Matrix {
    let cores = tt.cores();
    let d = cores.len();
    let (ck, ck1) = (&cores[k], &cores[k + 1]);
    let mut tmp = Vec::new();
    let lvecs: Vec<Vec<f64>> = left
        .iter()
        .map(|idx| {
            let mut v = vec![1.0];
            for (c, &i) in cores[..k].iter().zip(idx) {
                c.vec_mul(&v, i, &mut tmp);
                std::mem::swap(&mut v, &mut tmp);
            }
            v
        })
        .collect();
    let rvecs: Vec<Vec<f64>> = right
        .iter()
        .map(|idx| {
            let mut v = vec![1.0];
            for (c, &i) in cores[k + 2..d].iter().zip(idx).rev() {
                let mut out = vec![0.0; c.rl];
                for (a, o) in out.iter_mut().enumerate() {
                    *o = (0..c.rr).map(|b| c.at(a, i, b) * v[b]).sum();
                }
                v = out;
            }
            v
        })
        .collect();
    let (n1, n2) = (ck.n, ck1.n);
    // Right halves G_{k+1}(j) R_β.
    let mut rhalf = vec![vec![0.0; ck1.rl]; n2 * right.len()];
    for j in 0..n2 {
        for (b, rv) in rvecs.iter().enumerate() {
            let out = &mut rhalf[j * right.len() + b];
            for (g, o) in out.iter_mut().enumerate() {
                *o = (0..ck1.rr).map(|x| ck1.at(g, j, x) * rv[x]).sum();
            }
        }
    }
    let mut m = Matrix::zeros(left.len() * n1, n2 * right.len());
    for (a, lv) in lvecs.iter().enumerate() {
        for i in 0..n1 {
            ck.vec_mul(lv, i, &mut tmp);
            let row = m.row_mut(a * n1 + i);
            for (c, rh) in rhalf.iter().enumerate() {
                row[c] = tmp.iter().zip(rh).map(|(x, y)| x * y).sum();
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::{tt_full, DenseTensor};

    #[test]
    fn maxvol_single_column() {
        let a = Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(maxvol(&a, 0.05, 100).unwrap().rows, vec![2]);
    }

    #[test]
    fn maxvol_keeps_dominant_identity_block() {
        let a = Matrix::from_rows(&[
            vec![0.3, -0.2],
            vec![1.0, 0.0],
            vec![0.5, 0.9],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let mut rows = maxvol(&a, 0.05, 100).unwrap().rows;
        rows.sort();
        assert_eq!(rows, vec![1, 3]);
    }

    #[test]
    fn maxvol_rank_deficient() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert!(matches!(maxvol(&a, 0.05, 100), Err(SttError::NumericalFailure(_))));
    }

    #[test]
    fn skeleton_examples() {
        let u = [1.0, -2.0, 3.0];
        let v = [0.5, 4.0, 1.0, -1.0];
        let a = Matrix::from_fn(3, 4, |i, j| u[i] * v[j]);
        let s = skeleton(&a, &[1], &[2]).unwrap();
        assert!(s.sub(&a).max_abs() < 1e-14);
        let b = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let s = skeleton(&b, &[0, 1], &[0, 1]).unwrap();
        assert!(s.sub(&b).max_abs() < 1e-14);
        assert!(matches!(skeleton(&a, &[0, 1], &[0, 1]), Err(SttError::NumericalFailure(_))));
    }

    #[test]
    fn ledger_caches() {
        let mut calls = 0;
        let mut f = |b: &[Vec<usize>]| {
            calls += b.len();
            b.iter().map(|i| i[0] as f64).collect::<Vec<_>>()
        };
        let mut ledger = EvalLedger::new();
        let v = ledger.fetch(&[vec![1], vec![2], vec![1]], &mut f).unwrap();
        assert_eq!(v, vec![1.0, 2.0, 1.0]);
        ledger.fetch(&[vec![2], vec![3]], &mut f).unwrap();
        assert_eq!(ledger.eval_count(), 3);
        assert_eq!(calls, 3);
    }

    #[test]
    fn ledger_rejects_nan() {
        let mut f = |b: &[Vec<usize>]| vec![f64::NAN; b.len()];
        assert!(EvalLedger::new().fetch(&[vec![0]], &mut f).is_err());
    }

    #[test]
    fn constant_tensor_is_rank_one() {
        let shape = [4, 5, 3, 6];
        let mut f = |b: &[Vec<usize>]| vec![1.0; b.len()];
        let mut ledger = EvalLedger::new();
        let out = dmrg_cross(&shape, &mut f, &CrossConfig::default(), &mut ledger).unwrap();
        assert_eq!(out.tt.ranks(), vec![1; 5]);
        let full = tt_full(&out.tt, 1000).unwrap();
        assert!(full.data().iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rank_cap_reports_best() {
        // Rank-4 matrix with cap 2.
        let mut f = |b: &[Vec<usize>]| b.iter().map(|i| if i[0] == i[1] { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        let cfg = CrossConfig { rank_cap: 2, ..CrossConfig::default() };
        match dmrg_cross(&[4, 4], &mut f, &cfg, &mut EvalLedger::new()) {
            Err(SttError::RankCapReached { cap, best }) => {
                assert_eq!(cap, 2);
                assert!(best.max_rank() <= 2);
            }
            other => panic!("expected rank cap error, got {other:?}"),
        }
    }

    #[test]
    fn quantics_falls_back_for_odd_sizes() {
        let mut f = |b: &[Vec<usize>]| b.iter().map(|i| (i[0] + 2 * i[1]) as f64).collect::<Vec<_>>();
        let out = cross_on_quantics(&[3, 5], &mut f, &CrossConfig::default(), 2, &mut EvalLedger::new()).unwrap();
        let dense = DenseTensor::from_fn(&[3, 5], |i| (i[0] + 2 * i[1]) as f64);
        assert!(tt_full(&out.tt, 100).unwrap().distance(&dense) < 1e-10 * dense.frobenius_norm());
    }

    #[test]
    fn config_validation() {
        let bad = CrossConfig { eps: 0.0, ..CrossConfig::default() };
        let mut f = |b: &[Vec<usize>]| vec![1.0; b.len()];
        assert!(matches!(dmrg_cross(&[2, 2], &mut f, &bad, &mut EvalLedger::new()), Err(SttError::Configuration(_))));
    }
}
