//! Harmonic analysis on truncated homogeneous trees.

pub mod eigenproject;
pub mod error;
pub mod fit;
pub mod harness;
pub mod multipliers;
pub mod norms;
pub mod spectral;
pub mod transforms;
pub mod tree;

pub use error::{Error, Result};
pub use num_complex::Complex64;
