//! Function types on truncated trees and the transforms between them.

mod convolution;
mod fourier;
mod function;
mod synthesis;

pub use convolution::{convolve_radial, Convolution};
pub(crate) use convolution::ball_sum;
pub use fourier::{helgason_ft, pairing, poisson_at, poisson_matrix, poisson_transform, radialize, spherical_ft};
pub use function::{read_csv, shrink, write_csv, BoundaryFunction, Operand, RadialFunction, VertexFunction};
pub use synthesis::{
    strip_residual, synthesize_kernel, synthesize_kernel_adaptive, KernelSynthesis, DEFAULT_SYNTHESIS_TOL,
};
