use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("vertex index {index} out of range (tree has {count} vertices)")]
    Index { index: usize, count: usize },

    #[error("vertex at level {level} lies deeper than sector depth {depth}")]
    Depth { level: usize, depth: usize },

    #[error("c-function singular at z = {0}: |q^(iz) - q^(-iz)| < 1e-12")]
    Singularity(Complex64),

    #[error("derivative order {0} unsupported (maximum 8)")]
    UnsupportedOrder(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("symbol evaluation produced a non-finite value at z = {0}")]
    Evaluation(Complex64),

    #[error("eigenvalues must be pairwise distinct: |A[{first}] - A[{second}]| = {gap:e} <= 1e-10")]
    Distinctness { first: usize, second: usize, gap: f64 },

    #[error("confluent Vandermonde system ill-conditioned: condition number {0:e} exceeds 1e12")]
    IllConditioned(f64),

    #[error("kernel synthesis residual {residual:e} exceeds tolerance {tolerance:e} (support {support})")]
    SynthesisFailure { residual: f64, tolerance: f64, support: usize },

    #[error("truncation slack exhausted: operation needs {needed} levels, only {available} valid (increase R)")]
    Truncation { needed: usize, available: usize },

    #[error("symbol vanishes on the strip ({zeros} zeros per period): min |kappa| = {min_mod:e} at z = {argmin}")]
    Invertibility { min_mod: f64, argmin: Complex64, zeros: usize },

    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
