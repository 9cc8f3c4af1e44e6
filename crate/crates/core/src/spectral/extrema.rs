use super::{wrap_alpha, SpectralSymbol, StripParams};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_EXTREMA_GRID: usize = 4096;

const REFINE_WIDTH: f64 = 1e-12;
const VALUE_TOL: f64 = 1e-9;
const DEDUP_SEPARATION: f64 = 1e-6;

/// Extrema of `|kappa|` on the boundary line `Im z = delta_{p'}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaReport {
    pub max_mod: f64,
    pub argmax: Vec<f64>,
    pub min_mod: f64,
    pub argmin: Vec<f64>,
    pub p: f64,
    pub grid_size: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal function on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // endpoints of the last bracket can beat the midpoint on a flat top
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 > best.1 { cand } else { best })
}

pub fn golden_section_min(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_section_max(|t| -f(t), a, b, tol);
    (x, -v)
}

/// `(alpha_k, |kappa(alpha_k + i delta_{p'})|)` on a uniform grid of `(-tau/2, tau/2]`.
pub fn boundary_sweep(sym: &SpectralSymbol, strip: &StripParams, grid: usize) -> Result<Vec<(f64, f64)>> {
    let tau = strip.tau();
    let step = tau / grid as f64;
    let points: Vec<(f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|k| {
            let alpha = -tau / 2.0 + (k + 1) as f64 * step;
            (alpha, sym.eval(strip.boundary_point(alpha)).norm())
        })
        .collect();
    if let Some(&(alpha, _)) = points.iter().find(|(_, m)| !m.is_finite()) {
        return Err(Error::Evaluation(strip.boundary_point(alpha)));
    }
    Ok(points)
}

pub fn symbol_extrema(sym: &SpectralSymbol, p: f64) -> Result<ExtremaReport> {
    symbol_extrema_on_grid(sym, p, DEFAULT_EXTREMA_GRID)
}

pub fn symbol_extrema_on_grid(sym: &SpectralSymbol, p: f64, grid: usize) -> Result<ExtremaReport> {
    if grid < 8 {
        return Err(Error::Parameter(format!("grid size {grid} must be at least 8")));
    }
    let strip = StripParams::new(sym.q, p)?;
    let tau = strip.tau();
    let step = tau / grid as f64;
    let sweep = boundary_sweep(sym, &strip, grid)?;
    let modulus = |alpha: f64| sym.eval(strip.boundary_point(alpha)).norm();

    let (argmax, max_mod) = refine(&sweep, step, tau, &modulus, true);
    let (argmin, min_mod) = refine(&sweep, step, tau, &modulus, false);
    Ok(ExtremaReport { max_mod, argmax, min_mod, argmin, p, grid_size: grid })
}

fn refine(
    sweep: &[(f64, f64)],
    step: f64,
    tau: f64,
    modulus: &(impl Fn(f64) -> f64 + Sync),
    maximize: bool,
) -> (Vec<f64>, f64) {
    let n = sweep.len();
    let sign = if maximize { 1.0 } else { -1.0 };
    let v = |k: usize| sign * sweep[k].1;
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&k| {
            let prev = v((k + n - 1) % n);
            let next = v((k + 1) % n);
            v(k) > prev && v(k) >= next
        })
        .collect();
    if candidates.is_empty() {
        let best = (0..n).fold(0, |b, k| if v(k) > v(b) { k } else { b });
        candidates.push(best);
    }
    let refined: Vec<(f64, f64)> = candidates
        .par_iter()
        .map(|&k| {
            let centre = sweep[k].0;
            let f = |a: f64| sign * modulus(a);
            let (a, fa) = golden_section_max(f, centre - step, centre + step, REFINE_WIDTH);
            let (a, fa) = if sign * sweep[k].1 > fa { (centre, sign * sweep[k].1) } else { (a, fa) };
            // a maximizer at the seam tau/2 may converge from the -tau/2 side
            let a = wrap_alpha(a, tau);
            let a = if a < -tau / 2.0 + DEDUP_SEPARATION { a + tau } else { a };
            (a, sign * fa)
        })
        .collect();
    let best = refined
        .iter()
        .map(|r| r.1)
        .fold(if maximize { f64::NEG_INFINITY } else { f64::INFINITY }, |acc, x| {
            if maximize { acc.max(x) } else { acc.min(x) }
        });
    let tol = VALUE_TOL * best.abs().max(1.0);
    let mut args: Vec<f64> = refined
        .iter()
        .filter(|r| (r.1 - best).abs() <= tol)
        .map(|r| r.0)
        .collect();
    args.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::new();
    for a in args {
        let dup = out.iter().any(|&b| wrap_alpha(a - b, tau).abs() < DEDUP_SEPARATION);
        if !dup {
            out.push(a);
        }
    }
    (out, best)
}
