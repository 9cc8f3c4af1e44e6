//! Spectral projections for multipliers with finitely many eigenvalues of interest.
//!
//! For distinct `A_1..A_j` and order `N`, the projection polynomial `P_i` has degree
//! below `jN` and satisfies `P_i^(m)(A_k) = [i == k][m == 0]` for `m < N`. The
//! polynomials sum to one, so `f = sum_i P_i(op) f` always holds, and
//! `(op - A_i)^N P_i(op) f` vanishes when `f` is built from generalized
//! eigenfunctions with those eigenvalues.

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::multipliers::MultiplierOperator;
use crate::spectral::{conjugate, phi_deriv_table, MAX_DERIVATIVE_ORDER};
use crate::transforms::{Operand, RadialFunction};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const DISTINCTNESS_THRESHOLD: f64 = 1e-10;
pub const CONDITION_LIMIT: f64 = 1e12;
pub const MAX_SYSTEM_SIZE: usize = 64;

/// `P_i` in both the monomial basis and the shifted basis `u = (z - center) / scale` used for evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPolynomial {
    /// `a_0..a_{jN-1}` with `P(z) = sum a_l z^l`.
    pub coefficients: Vec<Complex64>,
    pub shifted: Vec<Complex64>,
    pub center: Complex64,
    pub scale: f64,
    /// Zero-based index of the target eigenvalue.
    pub target: usize,
    pub eigenvalues: Vec<Complex64>,
    pub order: usize,
    pub condition: f64,
}

impl ProjectionPolynomial {
    pub fn degree_bound(&self) -> usize {
        self.shifted.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let u = (z - self.center) / self.scale;
        self.shifted.iter().rev().fold(ZERO, |acc, b| acc * u + b)
    }

    /// `d^m P / dz^m` at `z`.
    pub fn derivative(&self, m: usize, z: Complex64) -> Complex64 {
        let u = (z - self.center) / self.scale;
        let mut acc = ZERO;
        for l in (m..self.shifted.len()).rev() {
            let falling: f64 = (l - m + 1..=l).map(|k| k as f64).product();
            acc = acc * u + self.shifted[l] * falling;
        }
        acc / self.scale.powi(m as i32)
    }

    /// Quotient of `P` by `prod_{k != i} (z - A_k)^N` and the largest remainder met on the way.
    pub fn deflate(&self) -> (Vec<Complex64>, f64) {
        let mut poly = self.coefficients.clone();
        let mut worst = 0.0f64;
        for (k, a) in self.eigenvalues.iter().enumerate() {
            if k == self.target {
                continue;
            }
            for _ in 0..self.order {
                let (quot, rem) = synthetic_division(&poly, *a);
                poly = quot;
                worst = worst.max(rem.norm());
            }
        }
        (poly, worst)
    }

    /// `Q_i(A_i)` read off the deflated polynomial.
    pub fn deflated_factor(&self) -> Complex64 {
        let (quot, _) = self.deflate();
        let z = self.eigenvalues[self.target];
        quot.iter().rev().fold(ZERO, |acc, c| acc * z + c)
    }
}

/// Divide `sum c_l z^l` by `(z - a)`.
fn synthetic_division(coeffs: &[Complex64], a: Complex64) -> (Vec<Complex64>, Complex64) {
    let d = coeffs.len() - 1;
    if d == 0 {
        return (vec![ZERO], coeffs[0]);
    }
    let mut quot = vec![ZERO; d];
    let mut carry = ZERO;
    for l in (0..=d).rev() {
        let v = coeffs[l] + carry * a;
        if l == 0 {
            return (quot, v);
        }
        quot[l - 1] = v;
        carry = v;
    }
    unreachable!()
}

fn check_inputs(a: &[Complex64], n: usize, i: usize) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Parameter("eigenvalue list A must be nonempty".into()));
    }
    if n < 1 {
        return Err(Error::Parameter(format!("order N = {n} must be >= 1")));
    }
    if i >= a.len() {
        return Err(Error::Parameter(format!("target index {i} out of range for {} eigenvalues", a.len())));
    }
    if a.len() * n > MAX_SYSTEM_SIZE {
        return Err(Error::Parameter(format!("jN = {} exceeds {MAX_SYSTEM_SIZE}", a.len() * n)));
    }
    for (x, ax) in a.iter().enumerate() {
        for (y, ay) in a.iter().enumerate().skip(x + 1) {
            let gap = (ax - ay).norm();
            if !(gap > DISTINCTNESS_THRESHOLD) {
                return Err(Error::Distinctness { first: x, second: y, gap });
            }
        }
    }
    Ok(())
}

fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Solve the confluent Vandermonde system for `P_i` (zero-based `i`).
pub fn confluent_vandermonde_solve(a: &[Complex64], n: usize, i: usize) -> Result<ProjectionPolynomial> {
    check_inputs(a, n, i)?;
    let j = a.len();
    let size = j * n;
    let center = a.iter().sum::<Complex64>() / j as f64;
    let spread = a.iter().map(|v| (v - center).norm()).fold(0.0, f64::max);
    let scale = if j == 1 || spread == 0.0 { 1.0 } else { spread };
    let u: Vec<Complex64> = a.iter().map(|v| (v - center) / scale).collect();

    // row (k, m): (1/m!) d^m/du^m of u^l at u_k
    let mut mat = DMatrix::<Complex64>::zeros(size, size);
    let mut rhs = DMatrix::<Complex64>::zeros(size, 1);
    for k in 0..j {
        for m in 0..n {
            let row = k * n + m;
            for l in m..size {
                mat[(row, l)] = binomial(l, m) * u[k].powu((l - m) as u32);
            }
            if k == i && m == 0 {
                rhs[(row, 0)] = ONE;
            }
        }
    }
    let sv = mat.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned(condition));
    }
    let sol = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::IllConditioned(f64::INFINITY))?;
    let shifted: Vec<Complex64> = sol.column(0).iter().copied().collect();

    let coefficients = (0..size)
        .map(|l| {
            (l..size)
                .map(|m| shifted[m] * binomial(m, l) * (-center).powu((m - l) as u32) / scale.powi(m as i32))
                .sum()
        })
        .collect();
    Ok(ProjectionPolynomial {
        coefficients,
        shifted,
        center,
        scale,
        target: i,
        eigenvalues: a.to_vec(),
        order: n,
        condition,
    })
}

/// `Q_i(A_i) = prod_{k != i} (A_i - A_k)^{-N}`.
pub fn q_factor(a: &[Complex64], n: usize, i: usize) -> Result<Complex64> {
    check_inputs(a, n, i)?;
    Ok(a.iter()
        .enumerate()
        .filter(|(k, _)| *k != i)
        .map(|(_, ak)| (a[i] - ak).powi(-(n as i32)))
        .product())
}

/// Components `f_i = P_i(op) f` with their eigen-residuals.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<O> {
    pub components: Vec<O>,
    pub eigenvalues: Vec<Complex64>,
    pub order: usize,
    /// `sup |(op - A_i)^N f_i|` over the valid region.
    pub residuals: Vec<f64>,
    /// `sup |f - sum f_i|` over the valid region.
    pub reconstruction_error: f64,
    pub polynomials: Vec<ProjectionPolynomial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub eigenvalues: Vec<Complex64>,
    pub order: usize,
    pub residuals: Vec<f64>,
    pub reconstruction_error: f64,
    pub component_sup: Vec<f64>,
    pub root_values: Vec<Complex64>,
    pub conditions: Vec<f64>,
    pub valid_radius: Option<usize>,
}

impl<O: Operand> EigenDecomposition<O> {
    pub fn report(&self) -> DecompositionReport {
        DecompositionReport {
            eigenvalues: self.eigenvalues.clone(),
            order: self.order,
            residuals: self.residuals.clone(),
            reconstruction_error: self.reconstruction_error,
            component_sup: self.components.iter().map(|c| c.valid_sup()).collect(),
            root_values: self.components.iter().map(|c| c.coefficients()[0]).collect(),
            conditions: self.polynomials.iter().map(|p| p.condition).collect(),
            valid_radius: self.components.first().and_then(|c| c.valid_radius()),
        }
    }
}

/// `P(op) f` by Horner's rule in the shifted variable.
fn apply_polynomial<O: Operand>(p: &ProjectionPolynomial, op: &MultiplierOperator, f: &O) -> Result<O> {
    let (last, rest) = p.shifted.split_last().expect("nonempty polynomial");
    let mut acc = f.scaled(*last);
    let inv = Complex64::new(1.0 / p.scale, 0.0);
    for b in rest.iter().rev() {
        let mut next = op.apply(&acc)?;
        next.axpy(-p.center, &acc);
        acc = next.scaled(inv);
        acc.axpy(*b, f);
    }
    Ok(acc)
}

/// Decompose `f` along the eigenvalues `A` of `op` with order `N`.
pub fn eigen_decompose<O: Operand>(
    f: &O,
    op: &MultiplierOperator,
    a: &[Complex64],
    n: usize,
) -> Result<EigenDecomposition<O>> {
    check_inputs(a, n, 0)?;
    let needed = (a.len() * n - 1 + n) * op.cost();
    let available = f.valid_radius().unwrap_or(0);
    if f.valid_radius().is_none() || needed > available {
        return Err(Error::Truncation { needed, available });
    }
    let polynomials = (0..a.len())
        .map(|i| confluent_vandermonde_solve(a, n, i))
        .collect::<Result<Vec<_>>>()?;
    let components = polynomials
        .iter()
        .map(|p| apply_polynomial(p, op, f))
        .collect::<Result<Vec<O>>>()?;
    let mut residuals = Vec::with_capacity(a.len());
    for (c, ai) in components.iter().zip(a) {
        let mut r = c.clone();
        for _ in 0..n {
            let mut next = op.apply(&r)?;
            next.axpy(-ai, &r);
            r = next;
        }
        residuals.push(r.valid_sup());
    }
    let mut sum = f.zeros_like();
    for c in &components {
        sum.axpy(ONE, c);
    }
    let reconstruction_error = sum.valid_sup_diff(f);
    Ok(EigenDecomposition { components, eigenvalues: a.to_vec(), order: n, residuals, reconstruction_error, polynomials })
}

/// `g_m(n) = D^m phi_z(n)` at `z = z0` for `m < n_max`, sampled on `0..=radius`.
pub fn generalized_eigen_basis(q: usize, z0: Complex64, n_max: usize, radius: usize) -> Result<Vec<RadialFunction>> {
    if n_max == 0 {
        return Err(Error::Parameter("basis size must be >= 1".into()));
    }
    if n_max > MAX_DERIVATIVE_ORDER {
        return Err(Error::UnsupportedOrder(n_max));
    }
    let table = phi_deriv_table(q, z0, radius, n_max - 1)?;
    table.into_iter().map(|values| RadialFunction::new(q, values)).collect()
}

/// Fitted polynomial order of `|f(n)| q^(n/p')` on `n in [R/2, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub radius: usize,
    pub p: f64,
}

pub const MIN_PROBE_RADIUS: usize = 12;

pub fn growth_order_probe(f: &RadialFunction, p: f64) -> Result<GrowthFit> {
    if !(1.0..2.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p}: exponent must satisfy 1 <= p < 2")));
    }
    let radius = f.valid_radius.unwrap_or(0).min(f.values.len() - 1);
    if radius < MIN_PROBE_RADIUS {
        return Err(Error::Parameter(format!("growth probe needs radius >= {MIN_PROBE_RADIUS}, got {radius}")));
    }
    if f.values.iter().all(|v| v.norm() == 0.0) {
        return Err(Error::Degenerate("growth probe on the zero function".into()));
    }
    let pc = conjugate(p);
    let lq = (f.q as f64).ln();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (radius / 2..=radius)
        .filter(|&n| n > 0 && f.values[n].norm() > 0.0)
        .map(|n| {
            let weight = if pc.is_infinite() { 0.0 } else { n as f64 * lq / pc };
            ((n as f64).ln(), f.values[n].norm().ln() + weight)
        })
        .unzip();
    let LinearFit { slope, intercept, r_squared, .. } =
        linear_fit(&xs, &ys).ok_or_else(|| Error::Degenerate("too few nonzero samples for a fit".into()))?;
    Ok(GrowthFit { slope, intercept, r_squared, radius, p })
}
