use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SttError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenzFamily {
    Oscillatory,
    ProductPeak,
    CornerPeak,
    Gaussian,
    Continuous,
    Discontinuous,
}

impl GenzFamily {
    pub const ALL: [GenzFamily; 6] = [
        GenzFamily::Oscillatory,
        GenzFamily::ProductPeak,
        GenzFamily::CornerPeak,
        GenzFamily::Gaussian,
        GenzFamily::Continuous,
        GenzFamily::Discontinuous,
    ];

    /// Normalization constants `(b, h)` of the classic suite: coefficients are
    /// rescaled so that `d^h ‖c‖₁ = b`.
    pub fn normalization(self) -> (f64, f64) {
        match self {
            GenzFamily::Oscillatory => (284.6, 1.5),
            GenzFamily::ProductPeak => (725.0, 2.0),
            GenzFamily::CornerPeak => (185.0, 2.0),
            GenzFamily::Gaussian => (70.3, 1.0),
            GenzFamily::Continuous => (2040.0, 2.0),
            GenzFamily::Discontinuous => (430.0, 2.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GenzFamily::Oscillatory => "oscillatory",
            GenzFamily::ProductPeak => "product-peak",
            GenzFamily::CornerPeak => "corner-peak",
            GenzFamily::Gaussian => "gaussian",
            GenzFamily::Continuous => "continuous",
            GenzFamily::Discontinuous => "discontinuous",
        }
    }
}

impl fmt::Display for GenzFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenzFamily {
    type Err = SttError;

    fn from_str(s: &str) -> Result<Self> {
        GenzFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| SttError::Configuration(format!("unknown Genz family '{s}'")))
    }
}

/// Parameters of one Genz function on `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenzSpec {
    pub family: GenzFamily,
    pub c: Vec<f64>,
    pub w: Vec<f64>,
    pub modified: bool,
}

impl GenzSpec {
    pub fn new(family: GenzFamily, c: Vec<f64>, w: Vec<f64>, modified: bool) -> Result<Self> {
        if c.is_empty() || c.len() != w.len() {
            return invalid(format!("Genz parameters need |c| = |w| >= 1, got {} and {}", c.len(), w.len()));
        }
        Ok(Self { family, c, w, modified })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let (c, w) = (&self.c, &self.w);
        match self.family {
            GenzFamily::Oscillatory => (2.0 * PI * w[0] + dot(c, x)).cos(),
            GenzFamily::ProductPeak => {
                x.iter().zip(c).zip(w).map(|((&xi, &ci), &wi)| 1.0 / (ci.powi(-2) + (xi + wi).powi(2))).product()
            }
            GenzFamily::CornerPeak => (1.0 + dot(c, x)).powi(-(x.len() as i32 + 1)),
            GenzFamily::Gaussian => {
                (-x.iter().zip(c).zip(w).map(|((&xi, &ci), &wi)| ci * ci * (xi - wi).powi(2)).sum::<f64>()).exp()
            }
            GenzFamily::Continuous => {
                (-x.iter().zip(c).zip(w).map(|((&xi, &ci), &wi)| ci * ci * (xi - wi).abs()).sum::<f64>()).exp()
            }
            GenzFamily::Discontinuous => {
                if x[0] > w[0] || (x.len() > 1 && x[1] > w[1]) {
                    0.0
                } else {
                    dot(c, x).exp()
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The Genz function described by `spec` as a closure.
pub fn genz_make(spec: &GenzSpec) -> impl Fn(&[f64]) -> f64 + Sync + Send + Clone {
    let spec = spec.clone();
    move |x: &[f64]| spec.eval(x)
}

/// Draw `c, w ~ U[0,1]^d` from `seed`. Classic mode rescales `c` to the
/// tabulated `‖c‖₁`; modified mode keeps the raw draw.
pub fn genz_sample(family: GenzFamily, d: usize, modified: bool, seed: u64) -> Result<GenzSpec> {
    if d == 0 {
        return invalid("Genz dimension must be >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let w: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    if !modified {
        let (b, h) = family.normalization();
        let target = b / (d as f64).powf(h);
        let l1: f64 = c.iter().sum();
        for ci in c.iter_mut() {
            *ci *= target / l1;
        }
    }
    GenzSpec::new(family, c, w, modified)
}
