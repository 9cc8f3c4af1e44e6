//! Radial multiplier operators acting on vertex functions and radial profiles.
//!
//! Each application of the Laplacian loses one level of validity at the
//! truncation boundary, so every operator reports a cost in levels and refuses
//! to run when its input has too little valid radius left.

use crate::error::{Error, Result};
use crate::spectral::{period, wrap_alpha, SpectralSymbol, StripParams, SymbolSpec};
use crate::transforms::{
    ball_sum, synthesize_kernel, KernelSynthesis, Operand, RadialFunction, VertexFunction,
};
use crate::tree::{ball_size, sphere_size};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Smallest `|kappa|` on the strip that still counts as nonvanishing.
pub const INVERTIBILITY_FLOOR: f64 = 1e-6;
const INVERT_GRID_RE: usize = 1024;
const INVERT_GRID_IM: usize = 17;

fn require_slack<O: Operand>(f: &O, needed: usize) -> Result<()> {
    let available = f.valid_radius().map_or(0, |r| r + 1);
    if needed >= available {
        return Err(Error::Truncation { needed, available: available.saturating_sub(1) });
    }
    Ok(())
}

/// `Lf = f - S_1 f`.
pub fn laplacian_apply<O: Operand>(f: &O) -> O {
    f.laplacian()
}

/// `S_n f`, the mean over spheres of radius `n`, by the three-term recursion.
pub fn sphere_avg<O: Operand>(f: &O, n: usize) -> O {
    sphere_avg_ladder(f, n).pop().expect("ladder holds S_0")
}

/// `[S_0 f, ..., S_n f]`.
fn sphere_avg_ladder<O: Operand>(f: &O, n: usize) -> Vec<O> {
    let qf = f.q() as f64;
    let mut ladder = vec![f.clone()];
    if n >= 1 {
        ladder.push(f.neighbour_mean());
    }
    for k in 2..=n {
        let mut next = ladder[k - 1].neighbour_mean().scaled(Complex64::new((qf + 1.0) / qf, 0.0));
        next.axpy(Complex64::new(-1.0 / qf, 0.0), &ladder[k - 2]);
        ladder.push(next);
    }
    ladder
}

/// `S_n f` by enumerating each sphere `S(x, n)`; only vertices with `|x| + n <= valid radius` are valid.
pub fn sphere_avg_direct(f: &VertexFunction, n: usize) -> VertexFunction {
    let g = f.geometry();
    let w = 1.0 / sphere_size(g.q(), n) as f64;
    let values = (0..g.vertex_count())
        .into_par_iter()
        .map(|x| ball_sum(g, x, n, |y, d| if d == n { f.values()[y] } else { ZERO }) * w)
        .collect();
    VertexFunction::new(g.clone(), values)
        .expect("length matches geometry")
        .with_valid_radius(crate::transforms::shrink(f.valid_radius(), n))
}

/// `B_n f = (1/#B(n)) sum_{j <= n} #S(j) S_j f`.
pub fn ball_avg<O: Operand>(f: &O, n: usize) -> O {
    let q = f.q();
    let ladder = sphere_avg_ladder(f, n);
    let mut out = f.zeros_like();
    let total = ball_size(q, n) as f64;
    for (j, s) in ladder.iter().enumerate() {
        out.axpy(Complex64::new(sphere_size(q, j) as f64 / total, 0.0), s);
    }
    out
}

/// `Psi(L) f` by Horner's rule, `coefficients[k]` multiplying `L^k`.
pub fn psi_of_l_apply<O: Operand>(coefficients: &[Complex64], f: &O) -> Result<O> {
    let Some((last, rest)) = coefficients.split_last() else {
        return Err(Error::Parameter("polynomial needs at least one coefficient".into()));
    };
    require_slack(f, rest.len())?;
    let mut acc = f.scaled(*last);
    for c in rest.iter().rev() {
        acc = acc.laplacian();
        acc.axpy(*c, f);
    }
    Ok(acc)
}

/// Number of Taylor terms `M` with `e^(2|xi|) (2|xi|)^(M+1) / (M+1)! < tol`.
pub fn heat_terms(xi: Complex64, tol: f64) -> usize {
    let r = 2.0 * xi.norm();
    let mut bound = r.exp() * r;
    let mut m = 0;
    while bound >= tol && m < 10_000 {
        m += 1;
        bound *= r / (m + 1) as f64;
    }
    m
}

/// `H_xi f = sum_{m <= M} xi^m L^m f / m!`.
pub fn heat_apply<O: Operand>(xi: Complex64, f: &O, tol: f64) -> Result<O> {
    if xi == ZERO {
        return Err(Error::Parameter("heat operator needs xi != 0".into()));
    }
    psi_of_l_apply(&heat_coefficients(xi, heat_terms(xi, tol)), f)
}

fn heat_coefficients(xi: Complex64, terms: usize) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(terms + 1);
    let mut term = ONE;
    for m in 0..=terms {
        if m > 0 {
            term *= xi / m as f64;
        }
        c.push(term);
    }
    c
}

/// Coefficients of `phi_z(n)` as a polynomial in `w = gamma(z)`, for `n = 0..=n_max`.
pub fn sphere_symbol_polynomials(q: usize, n_max: usize) -> Vec<Vec<f64>> {
    let qf = q as f64;
    let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
    if n_max >= 1 {
        polys.push(vec![1.0, -1.0]);
    }
    for n in 2..=n_max {
        let mut next = vec![0.0; n + 1];
        for (k, c) in polys[n - 1].iter().enumerate() {
            next[k] += (qf + 1.0) / qf * c;
            next[k + 1] -= (qf + 1.0) / qf * c;
        }
        for (k, c) in polys[n - 2].iter().enumerate() {
            next[k] -= c / qf;
        }
        polys.push(next);
    }
    polys
}

/// How an operator is realized numerically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum Realization {
    /// Repeated stencils; exact up to rounding.
    Stencil,
    /// Truncated Taylor series in `L` with the given tail bound.
    Series { terms: usize, tolerance: f64 },
    /// Convolution with a synthesized kernel.
    Kernel { synthesis: KernelSynthesis },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolSample {
    pub z: Complex64,
    pub value: Complex64,
}

/// JSON form of an operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorDescription {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Complex64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<Complex64>>,
    pub symbol_samples: Vec<SymbolSample>,
    pub valid_radius_cost: usize,
    pub realization: Realization,
}

/// A radial multiplier with a known symbol.
#[derive(Debug, Clone)]
pub struct MultiplierOperator {
    symbol: SpectralSymbol,
    realization: Realization,
}

/// Default tail bound for heat operators.
pub const DEFAULT_HEAT_TOL: f64 = 1e-12;

impl MultiplierOperator {
    /// Operator for a symbol family. Heat operators use [`DEFAULT_HEAT_TOL`]; reciprocals must go
    /// through [`invert_multiplier`].
    pub fn new(q: usize, spec: SymbolSpec) -> Result<Self> {
        Self::with_heat_tol(q, spec, DEFAULT_HEAT_TOL)
    }

    pub fn with_heat_tol(q: usize, spec: SymbolSpec, tol: f64) -> Result<Self> {
        let symbol = SpectralSymbol::new(q, spec)?;
        let realization = match &symbol.spec {
            SymbolSpec::Heat { xi } => {
                if !(tol > 0.0) {
                    return Err(Error::Parameter(format!("heat tolerance {tol} must be positive")));
                }
                Realization::Series { terms: heat_terms(*xi, tol), tolerance: tol }
            }
            SymbolSpec::Reciprocal { .. } => {
                return Err(Error::Parameter("reciprocal symbols are built with invert_multiplier".into()))
            }
            _ => Realization::Stencil,
        };
        Ok(Self { symbol, realization })
    }

    pub fn laplacian(q: usize) -> Self {
        Self { symbol: SpectralSymbol::laplacian(q), realization: Realization::Stencil }
    }

    pub fn symbol(&self) -> &SpectralSymbol {
        &self.symbol
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    pub fn q(&self) -> usize {
        self.symbol.q
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.symbol.eval(z)
    }

    /// Levels of valid radius consumed by one application.
    pub fn cost(&self) -> usize {
        match (&self.realization, &self.symbol.spec) {
            (Realization::Kernel { synthesis }, _) => synthesis.support,
            (Realization::Series { terms, .. }, _) => *terms,
            (_, SymbolSpec::Laplacian) => 1,
            (_, SymbolSpec::SphereAvg { n } | SymbolSpec::BallAvg { n }) => *n,
            (_, SymbolSpec::Polynomial { coefficients }) => coefficients.len() - 1,
            _ => 0,
        }
    }

    pub fn apply<O: Operand>(&self, f: &O) -> Result<O> {
        if f.q() != self.q() {
            return Err(Error::Parameter(format!(
                "operator built for q = {} applied to a function with q = {}",
                self.q(),
                f.q()
            )));
        }
        require_slack(f, self.cost())?;
        Ok(match (&self.realization, &self.symbol.spec) {
            (Realization::Kernel { synthesis }, _) => f.convolve(&synthesis.kernel),
            (Realization::Series { terms, .. }, SymbolSpec::Heat { xi }) => {
                psi_of_l_apply(&heat_coefficients(*xi, *terms), f)?
            }
            (_, SymbolSpec::Laplacian) => f.laplacian(),
            (_, SymbolSpec::SphereAvg { n }) => sphere_avg(f, *n),
            (_, SymbolSpec::BallAvg { n }) => ball_avg(f, *n),
            (_, SymbolSpec::Polynomial { coefficients }) => psi_of_l_apply(coefficients, f)?,
            _ => return Err(Error::Parameter(format!("no realization for {}", self.symbol.spec.label()))),
        })
    }

    /// `Psi` coefficients in powers of `L`, when the operator is a polynomial in `L`.
    pub fn polynomial_coefficients(&self) -> Option<Vec<Complex64>> {
        let q = self.q();
        let real = |v: Vec<f64>| v.into_iter().map(|c| Complex64::new(c, 0.0)).collect();
        match (&self.realization, &self.symbol.spec) {
            (Realization::Kernel { .. }, _) => None,
            (Realization::Series { terms, .. }, SymbolSpec::Heat { xi }) => Some(heat_coefficients(*xi, *terms)),
            (_, SymbolSpec::Laplacian) => Some(vec![ZERO, ONE]),
            (_, SymbolSpec::SphereAvg { n }) => sphere_symbol_polynomials(q, *n).pop().map(real),
            (_, SymbolSpec::BallAvg { n }) => {
                let total = ball_size(q, *n) as f64;
                let mut acc = vec![0.0; n + 1];
                for (j, p) in sphere_symbol_polynomials(q, *n).iter().enumerate() {
                    for (k, c) in p.iter().enumerate() {
                        acc[k] += sphere_size(q, j) as f64 / total * c;
                    }
                }
                Some(real(acc))
            }
            (_, SymbolSpec::Polynomial { coefficients }) => Some(coefficients.clone()),
            _ => None,
        }
    }

    pub fn describe(&self) -> OperatorDescription {
        let tau = period(self.q());
        let symbol_samples = (0..8)
            .map(|j| {
                let z = Complex64::new(j as f64 * tau / 14.0, 0.0);
                SymbolSample { z, value: self.eval(z) }
            })
            .collect();
        let kernel = match &self.realization {
            Realization::Kernel { synthesis } => Some(synthesis.kernel.values.clone()),
            _ => None,
        };
        OperatorDescription {
            kind: self.symbol.spec.label(),
            coefficients: self.polynomial_coefficients(),
            kernel,
            symbol_samples,
            valid_radius_cost: self.cost(),
            realization: self.realization.clone(),
        }
    }
}

/// Minimum of `|kappa|` over a grid of the strip and the number of zeros per period inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripScan {
    pub min_mod: f64,
    pub argmin: Complex64,
    pub zeros: usize,
}

/// Scan `|kappa|` over the strip `S_p` and count its zeros by the argument principle on one period.
///
/// The symbols are `tau`-periodic, so the vertical sides of the period rectangle cancel and the
/// winding number comes from the two horizontal edges alone.
pub fn strip_scan(sym: &SpectralSymbol, p: f64) -> Result<StripScan> {
    let strip = StripParams::new(sym.q, p)?;
    let tau = strip.tau();
    let w = strip.delta().abs();
    let alpha = |a: usize| -tau / 2.0 + a as f64 * tau / INVERT_GRID_RE as f64;
    let rows: Vec<Vec<Complex64>> = (0..INVERT_GRID_IM)
        .into_par_iter()
        .map(|b| {
            let im = -w + 2.0 * w * b as f64 / (INVERT_GRID_IM - 1) as f64;
            (0..=INVERT_GRID_RE).map(|a| sym.eval(Complex64::new(alpha(a), im))).collect()
        })
        .collect();
    let mut min_mod = f64::INFINITY;
    let mut argmin = ZERO;
    for (b, row) in rows.iter().enumerate() {
        let im = -w + 2.0 * w * b as f64 / (INVERT_GRID_IM - 1) as f64;
        for (a, v) in row.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Evaluation(Complex64::new(alpha(a), im)));
            }
            if v.norm() < min_mod {
                min_mod = v.norm();
                argmin = Complex64::new(wrap_alpha(alpha(a), tau), im);
            }
        }
    }
    let winding = |row: &[Complex64]| -> f64 {
        row.windows(2)
            .map(|pair| {
                let mut d = pair[1].arg() - pair[0].arg();
                if d > PI {
                    d -= 2.0 * PI;
                } else if d < -PI {
                    d += 2.0 * PI;
                }
                d
            })
            .sum::<f64>()
    };
    let zeros = if min_mod > 0.0 {
        let count = (winding(&rows[0]) - winding(&rows[INVERT_GRID_IM - 1])) / (2.0 * PI);
        count.round().max(0.0) as usize
    } else {
        1
    };
    Ok(StripScan { min_mod, argmin, zeros })
}

/// Inverse operator `kappa^{-1}` realized by a synthesized kernel of the given support.
pub fn invert_multiplier(op: &MultiplierOperator, p: f64, support: usize, tol: f64) -> Result<MultiplierOperator> {
    let scan = strip_scan(op.symbol(), p)?;
    if scan.zeros > 0 || scan.min_mod <= INVERTIBILITY_FLOOR {
        return Err(Error::Invertibility { min_mod: scan.min_mod, argmin: scan.argmin, zeros: scan.zeros });
    }
    let symbol = op.symbol().reciprocal();
    let synthesis = synthesize_kernel(&symbol, support, p, tol)?;
    Ok(MultiplierOperator { symbol, realization: Realization::Kernel { synthesis } })
}

/// Operator given directly by a radial kernel; the symbol is taken as `Polynomial` only when supplied.
pub fn kernel_operator(symbol: SpectralSymbol, synthesis: KernelSynthesis) -> MultiplierOperator {
    MultiplierOperator { symbol, realization: Realization::Kernel { synthesis } }
}

/// Radial profile version of `op`, for commuting checks.
pub fn apply_radial(op: &MultiplierOperator, f: &RadialFunction) -> Result<RadialFunction> {
    op.apply(f)
}
