//! Test functions, the Monte Carlo error metric, the stochastic diffusion
//! problem and the benchmark suites built from them.

mod error;
mod genz;
mod pde;
mod probes;
mod suites;

pub use error::{rel_l2_error, sample_points, surrogate_domains, ErrorEstimate, MonteCarloSet};
pub use genz::{genz_make, genz_sample, GenzFamily, GenzSpec};
pub use pde::{hermite_axes, kl_build, poisson_qoi, KLField, PoissonModel};
pub use probes::{bump, FourierProbe};
pub use suites::{
    run_feature, run_fourier, run_genz, run_pde, write_csv, BenchRow, FeatureSuite, FourierSuite, GenzSuite, McSettings,
    PdeSuite, CSV_HEADER,
};
