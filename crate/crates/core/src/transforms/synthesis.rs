use super::fourier::spherical_ft;
use super::function::RadialFunction;
use crate::error::{Error, Result};
use crate::spectral::{phi_table, SpectralSymbol, StripParams};
use crate::tree::sphere_size;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SYNTHESIS_TOL: f64 = 1e-8;
const STRIP_GRID_RE: usize = 64;
const STRIP_GRID_IM: usize = 16;

/// A synthesized radial kernel and how well its spherical transform matches the target symbol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSynthesis {
    pub kernel: RadialFunction,
    pub support: usize,
    pub samples: usize,
    /// `max |k^(z) - kappa(z)| / max(1, max |kappa(z)|)` over the strip validation grid.
    pub residual: f64,
    pub tolerance: f64,
}

/// Least-squares kernel of radius `support` whose transform matches `sym` at `4(support+1)`
/// real points of `[0, tau/2]`.
pub fn synthesize_kernel(sym: &SpectralSymbol, support: usize, p: f64, tol: f64) -> Result<KernelSynthesis> {
    let out = fit_kernel(sym, support, p, tol)?;
    if !(out.residual <= tol) {
        return Err(Error::SynthesisFailure { residual: out.residual, tolerance: tol, support });
    }
    Ok(out)
}

/// Grow the support from 1 until the strip residual drops below `tol`.
pub fn synthesize_kernel_adaptive(
    sym: &SpectralSymbol,
    p: f64,
    tol: f64,
    max_support: usize,
) -> Result<KernelSynthesis> {
    let mut last = f64::INFINITY;
    for support in 1..=max_support {
        let out = fit_kernel(sym, support, p, tol)?;
        if out.residual <= tol {
            return Ok(out);
        }
        last = out.residual;
    }
    Err(Error::SynthesisFailure { residual: last, tolerance: tol, support: max_support })
}

fn fit_kernel(sym: &SpectralSymbol, support: usize, p: f64, tol: f64) -> Result<KernelSynthesis> {
    if support < 1 {
        return Err(Error::Parameter("kernel support must be >= 1".into()));
    }
    let strip = StripParams::new(sym.q, p)?;
    let q = sym.q;
    let tau = strip.tau();
    let samples = 4 * (support + 1);
    let cols = support + 1;
    let mut a = DMatrix::<f64>::zeros(samples, cols);
    let mut b_re = DVector::<f64>::zeros(samples);
    let mut b_im = DVector::<f64>::zeros(samples);
    for j in 0..samples {
        let z = Complex64::new(j as f64 * (tau / 2.0) / (samples - 1) as f64, 0.0);
        let table = phi_table(q, z, support);
        for n in 0..cols {
            a[(j, n)] = sphere_size(q, n) as f64 * table[n].re;
        }
        let target = sym.eval(z);
        if !target.re.is_finite() || !target.im.is_finite() {
            return Err(Error::Evaluation(z));
        }
        b_re[j] = target.re;
        b_im[j] = target.im;
    }
    let scale: Vec<f64> = (0..cols)
        .map(|n| a.column(n).amax().max(f64::MIN_POSITIVE))
        .collect();
    for n in 0..cols {
        a.column_mut(n).scale_mut(1.0 / scale[n]);
    }
    let svd = a.svd(true, true);
    let x_re = svd.solve(&b_re, 1e-13).map_err(|e| Error::Degenerate(e.to_string()))?;
    let x_im = svd.solve(&b_im, 1e-13).map_err(|e| Error::Degenerate(e.to_string()))?;
    let values = (0..cols)
        .map(|n| Complex64::new(x_re[n], x_im[n]) / scale[n])
        .collect();
    let kernel = RadialFunction::new(q, values)?;
    let residual = strip_residual(sym, &kernel, &strip)?;
    Ok(KernelSynthesis { kernel, support, samples, residual, tolerance: tol })
}

/// Scaled sup distance between `k^` and `kappa` over a 64 x 16 grid of the strip.
pub fn strip_residual(sym: &SpectralSymbol, kernel: &RadialFunction, strip: &StripParams) -> Result<f64> {
    let tau = strip.tau();
    let width = strip.delta().abs();
    let points: Vec<Complex64> = (0..STRIP_GRID_RE)
        .flat_map(|a| {
            let re = -tau / 2.0 + (a + 1) as f64 * tau / STRIP_GRID_RE as f64;
            (0..STRIP_GRID_IM).map(move |b| {
                let im = -width + 2.0 * width * b as f64 / (STRIP_GRID_IM - 1) as f64;
                Complex64::new(re, im)
            })
        })
        .collect();
    let evals: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&z| {
            let target = sym.eval(z);
            ((spherical_ft(kernel, z) - target).norm(), target.norm())
        })
        .collect();
    if let Some(i) = evals.iter().position(|(d, t)| !d.is_finite() || !t.is_finite()) {
        return Err(Error::Evaluation(points[i]));
    }
    let err = evals.iter().map(|e| e.0).fold(0.0, f64::max);
    let size = evals.iter().map(|e| e.1).fold(1.0, f64::max);
    Ok(err / size)
}
