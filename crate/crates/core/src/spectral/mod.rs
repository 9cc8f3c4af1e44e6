//! Spectral objects of the Laplacian on a homogeneous tree.
//!
//! All functions are even and periodic in the spectral parameter `z` with period
//! `tau = 2*pi/ln q`. The spherical function `phi_z` is evaluated by its
//! three-term recursion; the two-exponential closed form is kept for validation.

mod extrema;
mod symbol;

pub use extrema::{
    boundary_sweep, golden_section_max, golden_section_min, symbol_extrema, symbol_extrema_on_grid,
    ExtremaReport, DEFAULT_EXTREMA_GRID,
};
pub use symbol::{SpectralSymbol, SymbolSpec};

use crate::error::{Error, Result};
use crate::tree::{ball_size, sphere_size};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Highest derivative order supported by [`phi_deriv`].
pub const MAX_DERIVATIVE_ORDER: usize = 8;

#[inline]
pub(crate) fn qpow(q: usize, w: Complex64) -> Complex64 {
    (w * (q as f64).ln()).exp()
}

/// Period `tau = 2*pi / ln q` of every spectral object.
pub fn period(q: usize) -> f64 {
    2.0 * PI / (q as f64).ln()
}

/// Wrap an angular coordinate into `(-tau/2, tau/2]`.
pub fn wrap_alpha(alpha: f64, tau: f64) -> f64 {
    let mut a = alpha - tau * (alpha / tau).round();
    if a <= -tau / 2.0 {
        a += tau;
    }
    if a > tau / 2.0 {
        a -= tau;
    }
    a
}

/// Strip `S_p = {|Im z| <= |1/p - 1/2|}` for `1 <= p < 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripParams {
    pub q: usize,
    pub p: f64,
}

impl StripParams {
    pub fn new(q: usize, p: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::Parameter(format!("q = {q}: branching parameter must be >= 2")));
        }
        if !(1.0..2.0).contains(&p) {
            return Err(Error::Parameter(format!("p = {p}: exponent must satisfy 1 <= p < 2")));
        }
        Ok(Self { q, p })
    }

    /// `delta_p = 1/p - 1/2`.
    pub fn delta(&self) -> f64 {
        1.0 / self.p - 0.5
    }

    /// `delta_{p'} = -delta_p`; the boundary line carrying the extremal symbol values.
    pub fn delta_conj(&self) -> f64 {
        -self.delta()
    }

    /// Conjugate exponent `p'`, infinite for `p = 1`.
    pub fn conj_exponent(&self) -> f64 {
        conjugate(self.p)
    }

    pub fn tau(&self) -> f64 {
        period(self.q)
    }

    pub fn boundary_point(&self, alpha: f64) -> Complex64 {
        Complex64::new(alpha, self.delta_conj())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.im.abs() <= self.delta().abs() + 1e-15
    }
}

pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// `gamma(z) = 1 - (q^(1/2+iz) + q^(1/2-iz)) / (q+1)`, the eigenvalue of the Laplacian on `phi_z`.
pub fn gamma(q: usize, z: Complex64) -> Complex64 {
    let h = Complex64::new(0.5, 0.0);
    1.0 - (qpow(q, h + I * z) + qpow(q, h - I * z)) / (q as f64 + 1.0)
}

pub fn c_func(q: usize, z: Complex64) -> Result<Complex64> {
    let qf = q as f64;
    let den = qpow(q, I * z) - qpow(q, -I * z);
    if den.norm() < 1e-12 {
        return Err(Error::Singularity(z));
    }
    let h = Complex64::new(0.5, 0.0);
    let num = qpow(q, h + I * z) - qpow(q, -h - I * z);
    Ok(qf.sqrt() / (qf + 1.0) * num / den)
}

/// `phi_z(n)` from the three-term recursion.
pub fn phi(q: usize, z: Complex64, n: usize) -> Complex64 {
    phi_table(q, z, n)[n]
}

/// `phi_z(0..=n_max)`.
pub fn phi_table(q: usize, z: Complex64, n_max: usize) -> Vec<Complex64> {
    let qf = q as f64;
    let a = 1.0 - gamma(q, z);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(Complex64::new(1.0, 0.0));
    if n_max >= 1 {
        out.push(a);
    }
    for n in 2..=n_max {
        let next = (qf + 1.0) / qf * a * out[n - 1] - out[n - 2] / qf;
        out.push(next);
    }
    out
}

/// Two-exponential form `c(z) q^((iz-1/2)n) + c(-z) q^((-iz-1/2)n)`; singular on `(tau/2)Z`.
pub fn phi_closed_form(q: usize, z: Complex64, n: usize) -> Result<Complex64> {
    let cp = c_func(q, z)?;
    let cm = c_func(q, -z)?;
    let nf = n as f64;
    let h = Complex64::new(0.5, 0.0);
    Ok(cp * qpow(q, (I * z - h) * nf) + cm * qpow(q, (-I * z - h) * nf))
}

/// `phi` at `z = k*tau/2`: `((q-1)/(q+1) n + 1) q^(-n/2)`, with sign `(-1)^n` for odd `k`.
pub fn phi_half_lattice(q: usize, k: i64, n: usize) -> f64 {
    let qf = q as f64;
    let nf = n as f64;
    let base = ((qf - 1.0) / (qf + 1.0) * nf + 1.0) * qf.powf(-nf / 2.0);
    if k.rem_euclid(2) == 1 && n % 2 == 1 {
        -base
    } else {
        base
    }
}

fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Table `d[m][n] = D^m phi_z(n)` for `m <= order`, `n <= n_max`, by differentiating the recursion.
pub fn phi_deriv_table(
    q: usize,
    z: Complex64,
    n_max: usize,
    order: usize,
) -> Result<Vec<Vec<Complex64>>> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let qf = q as f64;
    let lq = qf.ln();
    let h = Complex64::new(0.5, 0.0);
    let (up, um) = (qpow(q, h + I * z), qpow(q, h - I * z));
    // derivatives of phi_z(1) = (q^(1/2+iz) + q^(1/2-iz)) / (q+1)
    let da: Vec<Complex64> = (0..=order)
        .map(|k| {
            let s = (I * lq).powu(k as u32);
            let t = (-I * lq).powu(k as u32);
            (s * up + t * um) / (qf + 1.0)
        })
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut d = vec![vec![zero; n_max + 1]; order + 1];
    d[0][0] = Complex64::new(1.0, 0.0);
    if n_max >= 1 {
        for m in 0..=order {
            d[m][1] = da[m];
        }
    }
    for n in 2..=n_max {
        for m in 0..=order {
            let mut acc = zero;
            for k in 0..=m {
                acc += binomial(m, k) * da[k] * d[m - k][n - 1];
            }
            d[m][n] = (qf + 1.0) / qf * acc - d[m][n - 2] / qf;
        }
    }
    Ok(d)
}

/// `m`-th derivative in `z` of `phi_z(n)`.
pub fn phi_deriv(q: usize, z: Complex64, n: usize, m: usize) -> Result<Complex64> {
    Ok(phi_deriv_table(q, z, n, m)?[m][n])
}

/// `gamma_j(z) = q^(izj) + q^(-izj)`.
pub fn gamma_j(q: usize, z: Complex64, j: usize) -> Complex64 {
    let jf = j as f64;
    qpow(q, I * z * jf) + qpow(q, -I * z * jf)
}

/// Ball-average symbol `psi_z(n) = (1/#B(n)) sum_j #S(j) phi_z(j)`.
pub fn ball_symbol(q: usize, z: Complex64, n: usize) -> Complex64 {
    let table = phi_table(q, z, n);
    let sum: Complex64 = table
        .iter()
        .enumerate()
        .map(|(j, v)| v * sphere_size(q, j) as f64)
        .sum();
    sum / ball_size(q, n) as f64
}

/// Symbol `exp(xi * gamma(z))` of the complex-time heat operator.
pub fn heat_symbol(q: usize, xi: Complex64, z: Complex64) -> Result<Complex64> {
    if xi == Complex64::new(0.0, 0.0) {
        return Err(Error::Parameter("xi must be nonzero".into()));
    }
    Ok((xi * gamma(q, z)).exp())
}

/// Half-width `Phi_p(xi)` of the range of `Re(xi*gamma)` on the boundary line `Im z = delta_{p'}`.
pub fn phi_cap(q: usize, p: f64, xi: Complex64) -> Result<f64> {
    let strip = StripParams::new(q, p)?;
    if xi == Complex64::new(0.0, 0.0) {
        return Err(Error::Parameter("xi must be nonzero".into()));
    }
    let dc = strip.delta_conj();
    let a = 1.0 - gamma(q, Complex64::new(0.0, dc)).re;
    let t = (dc * (q as f64).ln()).tanh();
    Ok(a * (xi.re * xi.re + t * t * xi.im * xi.im).sqrt())
}

/// Angular positions `(beta_1, beta_2)` of the maximum and minimum of `|exp(xi*gamma)|`
/// on the boundary line, as alpha values in `(-tau/2, tau/2]`.
pub fn beta_points(q: usize, p: f64, xi: Complex64) -> Result<(f64, f64)> {
    let cap = phi_cap(q, p, xi)?;
    if !(cap > 1e-300) {
        return Err(Error::Degenerate(format!("Phi_p(xi) = {cap:e} vanishes")));
    }
    let strip = StripParams::new(q, p)?;
    let dc = strip.delta_conj();
    let tau = strip.tau();
    let a = 1.0 - gamma(q, Complex64::new(0.0, dc)).re;
    let b = gamma(q, Complex64::new(tau / 4.0, dc)).im;
    let lq = (q as f64).ln();
    let theta = |sign: f64| {
        let mut t = (sign * xi.im * b / cap).atan2(sign * xi.re * a / cap);
        if t <= -PI {
            t += 2.0 * PI;
        }
        t
    };
    Ok((theta(-1.0) / lq, theta(1.0) / lq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_values() {
        for q in [2, 3, 5] {
            assert!(gamma(q, c(0.0, -0.5)).norm() < 1e-14);
            let tau = period(q);
            assert!((gamma(q, c(tau / 2.0, -0.5)) - 2.0).norm() < 1e-13);
        }
        let expected = 1.0 - 2.0 * 2f64.sqrt() / 3.0;
        assert!((gamma(2, c(0.0, 0.0)) - expected).norm() < 1e-15);
        assert!((expected - 0.05719096).abs() < 1e-8);
    }

    #[test]
    fn c_function() {
        let z = c(0.37, 0.11);
        let s = c_func(2, z).unwrap() + c_func(2, -z).unwrap();
        assert!((s - 1.0).norm() < 1e-13);
        let tau = period(2);
        assert!(c_func(2, c(tau / 4.0, 0.0)).unwrap().is_finite());
        assert!(matches!(c_func(2, c(tau / 2.0, 0.0)), Err(Error::Singularity(_))));
        assert!(matches!(c_func(2, c(0.0, 0.0)), Err(Error::Singularity(_))));
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(3, c(0.4, -0.2), 0), c(1.0, 0.0));
        assert!((phi(2, c(0.0, 0.0), 2) - 5.0 / 6.0).norm() < 1e-15);
        let tau = period(2);
        let v = phi(2, c(tau / 2.0, 0.0), 3);
        assert!((v.re + 2.0 * 2f64.powf(-1.5)).abs() < 1e-14);
        assert!((v.re + 0.70711).abs() < 1e-5);
        for n in 0..10 {
            assert!((phi(5, c(0.0, -0.5), n) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn half_lattice_matches_recursion() {
        for q in [2, 3, 5] {
            let tau = period(q);
            for k in [0i64, 1, 2, -1] {
                for n in 0..=20 {
                    let r = phi(q, c(k as f64 * tau / 2.0, 0.0), n);
                    assert!((r - phi_half_lattice(q, k, n)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn derivative_edge_cases() {
        let z = c(0.3, -0.1);
        assert!((phi_deriv(2, z, 5, 0).unwrap() - phi(2, z, 5)).norm() < 1e-14);
        for m in 1..=8 {
            assert_eq!(phi_deriv(2, z, 0, m).unwrap(), c(0.0, 0.0));
        }
        assert!(matches!(phi_deriv(2, z, 3, 9), Err(Error::UnsupportedOrder(9))));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-5;
        let z = c(0.3, 0.0);
        let fd = (phi(2, z + h, 4) - phi(2, z - h, 4)) / (2.0 * h);
        assert!((phi_deriv(2, z, 4, 1).unwrap() - fd).norm() < 1e-7);
    }

    #[test]
    fn gamma_j_values() {
        let z = c(0.8, 0.3);
        assert!((gamma_j(3, z, 0) - 2.0).norm() < 1e-15);
        let r = gamma_j(2, c(0.7, 0.0), 3);
        assert!(r.im.abs() < 1e-14);
        assert!((r.re - 2.0 * (3.0 * 0.7 * 2f64.ln()).cos()).abs() < 1e-14);
        let v = gamma_j(2, c(0.0, -0.5), 1);
        assert!((v - (2f64.sqrt() + 0.5f64.sqrt())).norm() < 1e-14);
        assert!((v.re - 2.12132).abs() < 1e-5);
    }

    #[test]
    fn ball_symbol_values() {
        assert_eq!(ball_symbol(2, c(0.3, 0.1), 0), c(1.0, 0.0));
        for n in 0..8 {
            assert!((ball_symbol(3, c(0.0, -0.5), n) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn heat_symbol_values() {
        assert!(matches!(heat_symbol(2, c(0.0, 0.0), c(0.1, 0.0)), Err(Error::Parameter(_))));
        let xi = c(0.7, -0.2);
        assert!((heat_symbol(2, xi, c(0.0, -0.5)).unwrap() - 1.0).norm() < 1e-14);
        let tau = period(2);
        let v = heat_symbol(2, c(0.4, 0.0), c(tau / 2.0, -0.5)).unwrap();
        assert!((v - (0.8f64).exp()).norm() < 1e-12);
        let z = c(0.3, 0.2);
        assert!((heat_symbol(3, xi, z).unwrap() - heat_symbol(3, xi, -z).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn phi_cap_values() {
        assert!((phi_cap(2, 1.0, c(0.7, 0.0)).unwrap() - 0.7).abs() < 1e-14);
        let v = phi_cap(3, 1.0, c(0.0, -1.5)).unwrap();
        assert!((v - 1.5 * 2.0 / 4.0).abs() < 1e-14);
        assert!(phi_cap(2, 2.0, c(1.0, 0.0)).is_err());
        assert!(phi_cap(2, 0.9, c(1.0, 0.0)).is_err());
        assert!(phi_cap(2, 1.5, c(1e-9, 1e-9)).unwrap() < 1e-8);
    }

    #[test]
    fn beta_real_xi() {
        let tau = period(2);
        let (b1, b2) = beta_points(2, 1.5, c(0.8, 0.0)).unwrap();
        assert!((b1 - tau / 2.0).abs() < 1e-14);
        assert!(b2.abs() < 1e-14);
    }

    #[test]
    fn beta_imaginary_xi_is_the_argmax() {
        // for xi = it the maximum of Re(xi*gamma) on Im z = -1/2 sits at alpha = tau/4
        let tau = period(2);
        let (b1, b2) = beta_points(2, 1.0, c(0.0, 1.0)).unwrap();
        assert!((b1 - tau / 4.0).abs() < 1e-14);
        assert!((b2 + tau / 4.0).abs() < 1e-14);
    }

    #[test]
    fn beta_antipodal_on_axes() {
        let tau = period(3);
        for xi in [c(0.0, -0.4), c(1.3, 0.0), c(-0.6, 0.0)] {
            let (b1, b2) = beta_points(3, 1.5, xi).unwrap();
            let gap = wrap_alpha(b1 - b2, tau).abs();
            assert!((gap - tau / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrapping() {
        let tau = 4.0;
        assert_eq!(wrap_alpha(-2.0, tau), 2.0);
        assert_eq!(wrap_alpha(2.0, tau), 2.0);
        assert!((wrap_alpha(5.0, tau) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn strip_params() {
        let s = StripParams::new(2, 1.0).unwrap();
        assert_eq!(s.delta(), 0.5);
        assert_eq!(s.delta_conj(), -0.5);
        assert!(s.conj_exponent().is_infinite());
        let s = StripParams::new(2, 1.5).unwrap();
        assert!((s.conj_exponent() - 3.0).abs() < 1e-14);
        assert!(StripParams::new(2, 2.0).is_err());
        assert!(StripParams::new(1, 1.5).is_err());
    }
}
