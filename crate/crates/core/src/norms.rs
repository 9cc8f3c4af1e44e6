//! Norms and seminorms of functions on truncated trees.
//!
//! Every norm is computed over the valid ball `B(o, R)` and again over
//! `B(o, R-1)` and `B(o, R-2)`, so a report can say whether the value has
//! settled under truncation. All functions accept vertex functions and radial
//! profiles alike; a radial slot at level `n` stands for `#S(n)` vertices.

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::spectral::{conjugate, phi_table, StripParams};
use crate::transforms::Operand;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Relative increment below which consecutive truncation levels count as agreeing.
pub const STABILIZATION_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Schwartz,
    WeakLp,
    Lp,
    Hardy,
    HardyQPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub kind: NormKind,
    pub value: f64,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Truncation radius `R` the value was computed on.
    pub radius: usize,
    /// Values on `B(o, R-1)` and `B(o, R-2)`.
    pub previous: Vec<f64>,
    pub stabilized: bool,
}

/// `(level, |f|, multiplicity)` for every valid slot.
fn samples<O: Operand>(f: &O) -> Result<(usize, Vec<(usize, f64, f64)>)> {
    let radius = f
        .valid_radius()
        .ok_or_else(|| Error::Degenerate("function has no valid vertices".into()))?;
    let out = f
        .coefficients()
        .iter()
        .enumerate()
        .filter(|(i, _)| f.level_of(*i) <= radius)
        .map(|(i, v)| (f.level_of(i), v.norm(), f.multiplicity(i)))
        .collect();
    Ok((radius, out))
}

fn relative_step(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Evaluate `norm` on the balls of radius `R`, `R-1`, `R-2` and assemble the report.
fn truncation_ladder(
    kind: NormKind,
    p: f64,
    r: Option<f64>,
    m: Option<usize>,
    radius: usize,
    data: &[(usize, f64, f64)],
    norm: impl Fn(&[(usize, f64, f64)], usize) -> f64,
) -> NormReport {
    let value = norm(data, radius);
    let previous: Vec<f64> = (1..=2)
        .filter_map(|k| radius.checked_sub(k))
        .map(|cut| {
            let sub: Vec<_> = data.iter().copied().filter(|s| s.0 <= cut).collect();
            norm(&sub, cut)
        })
        .collect();
    let stabilized = previous.len() == 2
        && relative_step(value, previous[0]) < STABILIZATION_TOL
        && relative_step(previous[0], previous[1]) < STABILIZATION_TOL;
    NormReport { kind, value, p, r, m, radius, previous, stabilized }
}

/// `sup_x (1 + |x|)^m q^(|x|/p) |f(x)|`.
pub fn schwartz_seminorm<O: Operand>(f: &O, p: f64, m: usize) -> Result<NormReport> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p = {p}: exponent must be >= 1")));
    }
    let (radius, data) = samples(f)?;
    let q = f.q() as f64;
    Ok(truncation_ladder(NormKind::Schwartz, p, None, Some(m), radius, &data, |d, _| {
        d.iter()
            .map(|(n, v, _)| (1.0 + *n as f64).powi(m as i32) * q.powf(*n as f64 / p) * v)
            .fold(0.0, f64::max)
    }))
}

/// Exact `sup_t t d_f(t)^(1/p)` from the sorted magnitudes; `p = inf` gives the sup norm.
fn weak_from(data: &[(usize, f64, f64)], p: f64) -> f64 {
    if p.is_infinite() {
        return data.iter().map(|s| s.1).fold(0.0, f64::max);
    }
    let mut mags: Vec<(f64, f64)> = data.iter().filter(|s| s.1 > 0.0).map(|s| (s.1, s.2)).collect();
    mags.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut count = 0.0;
    let mut k = 0;
    while k < mags.len() {
        // a tie group shares one jump of the distribution function
        let v = mags[k].0;
        while k < mags.len() && mags[k].0 == v {
            count += mags[k].1;
            k += 1;
        }
        best = best.max(v * count.powf(1.0 / p));
    }
    best
}

pub fn weak_lp_norm<O: Operand>(f: &O, p: f64) -> Result<NormReport> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p = {p}: exponent must be >= 1")));
    }
    let (radius, data) = samples(f)?;
    Ok(truncation_ladder(NormKind::WeakLp, p, None, None, radius, &data, |d, _| weak_from(d, p)))
}

pub fn lp_norm<O: Operand>(f: &O, p: f64) -> Result<NormReport> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p = {p}: exponent must be >= 1")));
    }
    let (radius, data) = samples(f)?;
    Ok(truncation_ladder(NormKind::Lp, p, None, None, radius, &data, |d, _| {
        if p.is_infinite() {
            d.iter().map(|s| s.1).fold(0.0, f64::max)
        } else {
            d.iter().map(|(_, v, mult)| mult * v.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }))
}

/// `sup_n w(n)^{-1} (mean_{S(o,n)} |f|^r)^{1/r}`, or `sup_x w(|x|)^{-1} |f(x)|` for `r = inf`.
fn weighted_sphere_sup(data: &[(usize, f64, f64)], cut: usize, r: f64, weight: &[f64]) -> f64 {
    if r.is_infinite() {
        return data.iter().map(|(n, v, _)| v / weight[*n]).fold(0.0, f64::max);
    }
    let mut sums = vec![0.0; cut + 1];
    let mut counts = vec![0.0; cut + 1];
    for (n, v, mult) in data {
        sums[*n] += mult * v.powf(r);
        counts[*n] += mult;
    }
    (0..=cut)
        .filter(|&n| counts[n] > 0.0)
        .map(|n| (sums[n] / counts[n]).powf(1.0 / r) / weight[n])
        .fold(0.0, f64::max)
}

fn check_hardy(p: f64, r: f64) -> Result<StripParams> {
    if !(r >= 1.0) {
        return Err(Error::Parameter(format!("r = {r}: Hardy exponent must be >= 1")));
    }
    Ok(StripParams::new(2, p)?)
}

/// Hardy-type norm weighted by `phi_{i delta_p}`.
pub fn hardy_norm<O: Operand>(f: &O, p: f64, r: f64) -> Result<NormReport> {
    let strip = check_hardy(p, r)?;
    let (radius, data) = samples(f)?;
    let weight: Vec<f64> = phi_table(f.q(), Complex64::new(0.0, strip.delta()), radius)
        .iter()
        .map(|v| v.re)
        .collect();
    Ok(truncation_ladder(NormKind::Hardy, p, Some(r), None, radius, &data, |d, cut| {
        weighted_sphere_sup(d, cut, r, &weight)
    }))
}

/// Hardy-type norm with the comparable weight `q^(-n/p')`.
pub fn hardy_norm_qpower<O: Operand>(f: &O, p: f64, r: f64) -> Result<NormReport> {
    check_hardy(p, r)?;
    let (radius, data) = samples(f)?;
    let pc = conjugate(p);
    let q = f.q() as f64;
    let weight: Vec<f64> = (0..=radius)
        .map(|n| if pc.is_infinite() { 1.0 } else { q.powf(-(n as f64) / pc) })
        .collect();
    Ok(truncation_ladder(NormKind::HardyQPower, p, Some(r), None, radius, &data, |d, cut| {
        weighted_sphere_sup(d, cut, r, &weight)
    }))
}

/// `(1/n) sum_{B(o,n)} |f|^{p'}` for `n = 1..=R` with a log-log fit over `n in [R/2, R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSumReport {
    pub p: f64,
    pub table: Vec<(usize, f64)>,
    pub max: f64,
    pub fit: Option<LinearFit>,
}

pub fn ball_sum_diagnostic<O: Operand>(f: &O, p: f64) -> Result<BallSumReport> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::Parameter(format!("p = {p}: ball-sum diagnostic needs 1 < p < 2")));
    }
    let pc = conjugate(p);
    let (radius, data) = samples(f)?;
    let mut by_level = vec![0.0; radius + 1];
    for (n, v, mult) in &data {
        by_level[*n] += mult * v.powf(pc);
    }
    let mut acc = by_level[0];
    let mut table = Vec::with_capacity(radius);
    for (n, s) in by_level.iter().enumerate().skip(1) {
        acc += s;
        table.push((n, acc / n as f64));
    }
    let max = table.iter().map(|t| t.1).fold(0.0, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) = table
        .iter()
        .filter(|(n, v)| *n >= (radius / 2).max(1) && *v > 0.0)
        .map(|(n, v)| ((*n as f64).ln(), v.ln()))
        .unzip();
    Ok(BallSumReport { p, table, max, fit: linear_fit(&xs, &ys) })
}

/// Write `(n, value)` rows as CSV.
pub fn write_table_csv<W: Write>(rows: &[(usize, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "value"])?;
    for (n, v) in rows {
        w.write_record([n.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
