//! Spectral tensor-train surrogates of black-box multivariate functions.
//!
//! The pipeline samples a quadrature-weighted tensor of function values with
//! rank-revealing DMRG cross approximation ([`cross`]), turns the resulting
//! tensor train into per-dimension coefficient or value cores ([`stt`]) and
//! evaluates the surrogate at arbitrary points. [`bench`] holds the test
//! functions and error metrics used to exercise the method.

pub mod bench;
pub mod cli;
pub mod cross;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod stt;
pub mod tt;

pub use error::{Result, SttError};
