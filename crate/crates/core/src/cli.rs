//! The `stt` command-line front end.
//!
//! Three commands: `build` samples a builtin function and writes a surrogate
//! file, `eval` evaluates a surrogate at points read from CSV, and `bench`
//! runs one of the benchmark suites and writes its CSV table. Every flag can
//! also come from a JSON config file (`--config`); flags on the command line
//! win.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::{
    bump, genz_make, genz_sample, hermite_axes, kl_build, run_feature, run_fourier, run_genz, run_pde, write_csv,
    BenchRow, FeatureSuite, FourierSuite, GenzFamily, GenzSuite, McSettings, PdeSuite, PoissonModel,
};
use crate::cross::EvalLedger;
use crate::error::{Result, SttError};
use crate::linalg::Matrix;
use crate::quadrature::Domain;
use crate::stt::{
    ftt_interpolation_construct_with_ledger, ftt_projection_construct_with_ledger, load_surrogate, save_surrogate,
    BuildOptions, GridSpec, Surrogate, SurrogateMode,
};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const FORMAT: i32 = 4;
}

/// Environment variable naming a directory where build evaluations are
/// cached between runs.
pub const CACHE_DIR_ENV: &str = "STT_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "stt", version, about = "Spectral tensor-train surrogates of black-box functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a surrogate of a builtin function and write it to a file.
    Build(BuildArgs),
    /// Evaluate a surrogate at the points of a CSV file.
    Eval(EvalArgs),
    /// Run a benchmark suite and write its CSV table.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Projection,
    Lagrange,
    Linear,
}

impl From<ModeArg> for SurrogateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Projection => SurrogateMode::Projection,
            ModeArg::Lagrange => SurrogateMode::LagrangeInterp,
            ModeArg::Linear => SurrogateMode::LinearInterp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Genz,
    Fourier,
    Feature,
    Pde,
}

/// Flags shared by `build` and `bench`. All optional so that a config file
/// can fill the gaps.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Builtin function: genz-<family>, bump, fourier or poisson.
    #[arg(long)]
    pub function: Option<String>,
    /// Number of dimensions (comma separated list for `bench`).
    #[arg(long, value_delimiter = ',')]
    pub dim: Option<Vec<usize>>,
    /// Polynomial degree, or points per dimension in linear mode (comma
    /// separated list for `bench`).
    #[arg(long, value_delimiter = ',')]
    pub degree: Option<Vec<usize>>,
    /// Target relative accuracy of the cross approximation.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Seed for the cross engine and for random function parameters.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Output path; standard output when omitted (bench, eval).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for function evaluations.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Use the classic (normalized) Genz coefficients.
    #[arg(long)]
    pub classic: bool,
    /// Genz family for the genz suite.
    #[arg(long)]
    pub family: Option<String>,
    /// Coupled dimensions of the fourier probe, e.g. `0,4`.
    #[arg(long, value_delimiter = ',')]
    pub pair: Option<Vec<usize>>,
    /// Write zeros in the timing fields so output is byte-stable.
    #[arg(long)]
    pub no_timings: bool,
}

impl RunConfig {
    /// Fill every unset field from `file`.
    pub fn overlay(self, file: RunConfig) -> RunConfig {
        RunConfig {
            function: self.function.or(file.function),
            dim: self.dim.or(file.dim),
            degree: self.degree.or(file.degree),
            eps: self.eps.or(file.eps),
            seed: self.seed.or(file.seed),
            mode: self.mode.or(file.mode),
            out: self.out.or(file.out),
            jobs: self.jobs.or(file.jobs),
            classic: self.classic || file.classic,
            family: self.family.or(file.family),
            pair: self.pair.or(file.pair),
            no_timings: self.no_timings || file.no_timings,
        }
    }

    fn timings(&self) -> bool {
        !self.no_timings
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn options(&self, default_eps: f64) -> Result<BuildOptions> {
        let eps = self.eps.unwrap_or(default_eps);
        let mut opts = BuildOptions { parallel: true, ..BuildOptions::with_eps(eps) };
        opts.cross.seed = self.seed();
        opts.cross.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub run: RunConfig,
    /// JSON file with any of the flags above (without dashes).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Surrogate file written by `build`.
    #[arg(long)]
    pub surrogate: PathBuf,
    /// CSV of points, one per row, with an optional header; `-` reads
    /// standard input.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub run: RunConfig,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Report printed by `build`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildReport {
    pub function: String,
    pub mode: SurrogateMode,
    pub eval_count: usize,
    pub ranks: Vec<usize>,
    pub sweeps: usize,
    pub converged: bool,
    pub seconds: f64,
    pub out: PathBuf,
}

/// Exit code for a library error.
pub fn exit_code(e: &SttError) -> i32 {
    match e {
        SttError::InvalidInput(_) | SttError::Configuration(_) | SttError::Domain(_) => exit::USAGE,
        SttError::NumericalFailure(_)
        | SttError::RankCapReached { .. }
        | SttError::DegenerateFunction(_)
        | SttError::Resource(_) => exit::NUMERICAL,
        SttError::Format(_) | SttError::Io(_) => exit::FORMAT,
    }
}

/// Parse the process arguments, run the command and return the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match dispatch(cli.command, &mut io::stdout().lock()) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("stt: {e}");
            exit_code(&e)
        }
    }
}

/// Run a parsed command, writing anything destined for standard output to
/// `stdout`.
pub fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Build(a) => {
            let cfg = resolve(a.run, a.config.as_deref())?;
            let report = in_pool(cfg.jobs, || cmd_build(&cfg))?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?;
        }
        Command::Eval(a) => {
            let text = read_input(&a.points)?;
            let s = load_surrogate(&a.surrogate)?;
            let out = in_pool(a.jobs, || cmd_eval(&s, &text))?;
            emit(a.out.as_deref(), out.as_bytes(), stdout)?;
        }
        Command::Bench(a) => {
            let cfg = resolve(a.run, a.config.as_deref())?;
            let rows = in_pool(cfg.jobs, || cmd_bench(a.suite, &cfg))?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf, cfg.timings())?;
            emit(cfg.out.as_deref(), &buf, stdout)?;
        }
    }
    Ok(())
}

fn resolve(flags: RunConfig, config: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = config else { return Ok(flags) };
    let text = fs::read_to_string(path)?;
    let file: RunConfig = serde_json::from_str(&text)
        .map_err(|e| SttError::Configuration(format!("{}: {e}", path.display())))?;
    Ok(flags.overlay(file))
}

fn emit(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(0) => Err(SttError::Configuration("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SttError::Resource(e.to_string()))?
            .install(f),
    }
}

fn single(v: &Option<Vec<usize>>, name: &str, default: usize) -> Result<usize> {
    match v.as_deref() {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(_) => Err(SttError::Configuration(format!("--{name} takes a single value for this command"))),
    }
}

/// A builtin function and the measure it is approximated under.
struct Builtin {
    f: Box<dyn Fn(&[f64]) -> f64 + Sync>,
    domains: Vec<Domain>,
}

fn builtin(cfg: &RunConfig, name: &str, d: usize) -> Result<Builtin> {
    if let Some(family) = name.strip_prefix("genz-") {
        let family: GenzFamily = family.parse()?;
        let spec = genz_sample(family, d, !cfg.classic, cfg.seed())?;
        return Ok(Builtin { f: Box::new(genz_make(&spec)), domains: vec![Domain::unit(); d] });
    }
    match name {
        "bump" => Ok(Builtin { f: Box::new(bump(vec![0.2; d], 0.05)?), domains: vec![Domain::unit(); d] }),
        "fourier" => {
            let pair = pair(cfg)?;
            let probe = FourierSuite::coupled_pair(d, pair)?.probe;
            Ok(Builtin { f: Box::new(move |x: &[f64]| probe.eval(x)), domains: vec![Domain::symmetric(); d] })
        }
        "poisson" => {
            let s = PdeSuite::default();
            let kl = kl_build(s.sigma2, s.l, s.kl_grid, 0.95)?;
            let model = PoissonModel::new(&kl, s.mesh, s.x0)?;
            let d = model.dim();
            Ok(Builtin { f: Box::new(move |y: &[f64]| model.qoi(y).unwrap_or(f64::NAN)), domains: vec![Domain::RealLine; d] })
        }
        other => Err(SttError::Configuration(format!(
            "unknown function `{other}` (expected genz-<family>, bump, fourier or poisson)"
        ))),
    }
}

fn pair(cfg: &RunConfig) -> Result<[usize; 2]> {
    match cfg.pair.as_deref() {
        None => Ok([1, 2]),
        Some([a, b]) => Ok([*a, *b]),
        Some(_) => Err(SttError::Configuration("--pair takes two dimensions".into())),
    }
}

/// Build, save and report. Evaluations are cached under `STT_CACHE_DIR`
/// when it is set, keyed by a hash of everything that determines the
/// sampled tensor.
pub fn cmd_build(cfg: &RunConfig) -> Result<BuildReport> {
    let name = cfg.function.clone().ok_or_else(|| SttError::Configuration("--function is required".into()))?;
    let out = cfg.out.clone().ok_or_else(|| SttError::Configuration("--out is required for build".into()))?;
    let mode: SurrogateMode = cfg.mode.unwrap_or(ModeArg::Projection).into();
    let d = single(&cfg.dim, "dim", 5)?;
    let level = single(&cfg.degree, "degree", 7)?;
    let opts = cfg.options(1e-10)?;
    let func = builtin(cfg, &name, d)?;
    let d = func.domains.len();

    let grid = match (mode, name.as_str()) {
        (SurrogateMode::LinearInterp, _) => GridSpec::equispaced(&vec![level; d], &func.domains)?,
        // Probabilists' Hermite rules, as in the benchmark.
        (_, "poisson") => GridSpec::new(hermite_axes(d, level)?)?,
        _ => GridSpec::gauss(&vec![level; d], &func.domains)?,
    };

    let mut ledger = EvalLedger::new();
    let cache = cache_path(cfg, &name, mode, d, level)?;
    if let Some(p) = cache.as_deref().filter(|p| p.exists()) {
        ledger.load(p)?;
    }
    let mut s = match mode {
        SurrogateMode::Projection => {
            ftt_projection_construct_with_ledger(&func.f, &grid, &vec![level; d], &opts, &mut ledger)?
        }
        _ => ftt_interpolation_construct_with_ledger(&func.f, &grid, mode, &opts, &mut ledger)?,
    };
    if let Some(p) = cache.as_deref() {
        ledger.save(p)?;
    }
    if !cfg.timings() {
        s.info.seconds = 0.0;
    }
    save_surrogate(&s, &out)?;
    Ok(BuildReport {
        function: name,
        mode,
        eval_count: s.info.eval_count,
        ranks: s.ranks(),
        sweeps: s.info.sweeps,
        converged: s.info.converged,
        seconds: s.info.seconds,
        out,
    })
}

fn cache_path(cfg: &RunConfig, name: &str, mode: SurrogateMode, d: usize, level: usize) -> Result<Option<PathBuf>> {
    let Ok(dir) = std::env::var(CACHE_DIR_ENV) else { return Ok(None) };
    fs::create_dir_all(&dir)?;
    // The ledger is keyed by grid indices, so the key covers the function,
    // its random parameters and the grid; eps and mode-independent settings
    // do not change the sampled values.
    let grid_kind = if mode == SurrogateMode::LinearInterp { "uniform" } else { "gauss" };
    let key = serde_json::json!({
        "function": name,
        "d": d,
        "level": level,
        "grid": grid_kind,
        "seed": cfg.seed(),
        "classic": cfg.classic,
        "pair": cfg.pair,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let hash = Sha256::digest(key.to_string().as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    Ok(Some(Path::new(&dir).join(format!("{hex}.ledger"))))
}

/// Evaluate `s` at the points in CSV `text`. The output repeats the input
/// rows with a `value` column appended; a header is kept or, when absent,
/// generated as `x0..x{d-1}`.
pub fn cmd_eval(s: &Surrogate, text: &str) -> Result<String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let d = s.ndim();
    let mut header: Option<Vec<String>> = None;
    let mut data = Vec::new();
    let mut n = 0;
    for (i, rec) in reader.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| SttError::Format(format!("line {line}: {e}")))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if row.len() != d {
                    return Err(SttError::Format(format!(
                        "line {line}: expected {d} coordinates, found {}",
                        row.len()
                    )));
                }
                data.extend(row);
                n += 1;
            }
            Err(_) if line == 1 => header = Some(rec.iter().map(String::from).collect()),
            Err(e) => return Err(SttError::Format(format!("line {line}: {e}"))),
        }
    }
    if n == 0 && header.is_none() {
        return Ok(String::new());
    }
    if let Some(h) = &header {
        if h.len() != d {
            return Err(SttError::Format(format!("line 1: header has {} columns, surrogate has {d}", h.len())));
        }
    }
    let points = Matrix::from_vec(n, d, data)?;
    let values = s.eval(&points)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| SttError::Io(io::Error::other(e));
    let mut head = header.unwrap_or_else(|| (0..d).map(|k| format!("x{k}")).collect());
    head.push("value".into());
    w.write_record(&head).map_err(fail)?;
    for (i, v) in values.iter().enumerate() {
        let mut rec: Vec<String> = points.row(i).iter().map(f64::to_string).collect();
        rec.push(v.to_string());
        w.write_record(&rec).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| SttError::Io(io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Run a suite. Defaults follow the benchmark designs: degrees 1,3,7,15 for
/// genz projection, grids 8..64 for genz linear.
pub fn cmd_bench(suite: Suite, cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    let mc = McSettings::default();
    match suite {
        Suite::Genz => {
            let family: GenzFamily = cfg.family.as_deref().unwrap_or("gaussian").parse()?;
            let mode: SurrogateMode = cfg.mode.unwrap_or(ModeArg::Projection).into();
            let default_levels =
                if mode == SurrogateMode::LinearInterp { vec![8, 16, 32, 64] } else { vec![1, 3, 7, 15] };
            run_genz(&GenzSuite {
                family,
                modified: !cfg.classic,
                dims: cfg.dim.clone().unwrap_or_else(|| vec![5, 10, 20]),
                levels: cfg.degree.clone().unwrap_or(default_levels),
                mode,
                build: cfg.options(1e-10)?,
                mc,
            })
        }
        Suite::Fourier => {
            let d = single(&cfg.dim, "dim", 5)?;
            let mut s = FourierSuite::coupled_pair(d, pair(cfg)?)?;
            s.degree = single(&cfg.degree, "degree", 15)?;
            s.build = cfg.options(1e-10)?;
            Ok(vec![run_fourier(&s)?.0])
        }
        Suite::Feature => {
            let d = single(&cfg.dim, "dim", 2)?;
            let s = FeatureSuite {
                x0: vec![0.2; d],
                grid: single(&cfg.degree, "degree", 32)?,
                build: cfg.options(1e-10)?,
                ..FeatureSuite::default()
            };
            Ok(vec![run_feature(&s)?.0])
        }
        Suite::Pde => {
            let mut s = PdeSuite::default();
            if let Some(deg) = &cfg.degree {
                s.degrees = deg.clone();
            }
            s.build = cfg.options(1e-3)?;
            run_pde(&s)
        }
    }
}

/// Read a whole file or standard input (`-`).
pub fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}
