//! Numerical laboratory for the maxima of partial sums of m-periodic
//! exponential-sum families: Birch sums, (generalized) Kloosterman sums,
//! additively twisted hyper-Kloosterman sums, and an adversarial binary-field
//! family whose partial sums saturate the Pólya–Vinogradov bound.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! finite_field -> families -> partial_sums -> distribution
//!                                  |
//!               gmax    random_model    constants
//! ```
//!
//! `families` produces one period of each member as complex values,
//! `partial_sums` measures prefix sums, maxima and spectra, `distribution`
//! scans whole families into empirical tail functions and runs the moment /
//! short-sum / coarse-grid audits, while `gmax`, `random_model` and
//! `constants` provide the extremal functional, the USp(2r) trace model and
//! the deterministic saddle-point constants the tails are compared against.

pub mod constants;
pub mod distribution;
pub mod families;
pub mod finite_field;
pub mod gmax;
pub mod partial_sums;
pub mod random_model;
pub mod rng;

pub(crate) mod fft;
pub(crate) mod quadrature;

pub use num_complex::Complex64;

/// Euler–Mascheroni constant, to f64 precision.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
