use crate::error::{Error, Result};
use crate::multipliers::MultiplierOperator;
use crate::spectral::phi_table;
use crate::transforms::{Operand, RadialFunction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Longest radial profile the forward iteration will allocate.
pub const MAX_PROFILE_LEN: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
    BiInfinite,
}

impl Direction {
    pub fn has_forward(self) -> bool {
        matches!(self, Self::Forward | Self::BiInfinite)
    }

    pub fn has_backward(self) -> bool {
        matches!(self, Self::Backward | Self::BiInfinite)
    }
}

/// One spherical-function mode `coeff * phi_z` of the seed, with `eigenvalue = kappa(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub coeff: Complex64,
    pub z: Complex64,
    pub eigenvalue: Complex64,
    pub contaminant: bool,
}

/// Iterates `f_k` for `k = -k_backward ..= k_forward`, each restricted to `B(o, R)`.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub indices: Vec<i64>,
    pub iterates: Vec<RadialFunction>,
    pub k_forward: usize,
    pub k_backward: usize,
    /// Worst relative `sup |op f_k - A f_{k+1}|` over consecutive pairs.
    pub relation_residual: f64,
}

impl Sequence {
    pub fn get(&self, k: i64) -> Option<&RadialFunction> {
        self.indices.iter().position(|&j| j == k).map(|i| &self.iterates[i])
    }
}

/// `sum_i c_i t_i phi_{z_i}` on `0..=len`.
pub(crate) fn mode_profile(q: usize, modes: &[Mode], weights: &[Complex64], len: usize) -> RadialFunction {
    let mut values = vec![Complex64::new(0.0, 0.0); len + 1];
    for (m, w) in modes.iter().zip(weights) {
        let c = m.coeff * w;
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (v, t) in values.iter_mut().zip(phi_table(q, m.z, len)) {
            *v += c * t;
        }
    }
    RadialFunction::from_fn(q, len, |n| values[n])
}

fn restrict(f: &RadialFunction, radius: usize) -> RadialFunction {
    let mut out = f.resized(radius);
    out.valid_radius = Some(radius);
    out
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Build the iterates of `f_{k+1} = op(f_k) / A` seeded by the given modes.
///
/// Each iterate is the spectral expression `sum c_i (kappa_i / A)^k phi_{z_i}`;
/// the operator itself is then applied to every iterate and compared with
/// `A` times its successor. Repeated application would not do: rounding
/// errors at other spectral points grow like `(sup |kappa| / |A|)^k`.
pub fn build_sequence(
    op: &MultiplierOperator,
    modes: &[Mode],
    a: Complex64,
    direction: Direction,
    k: usize,
    radius: usize,
) -> Result<Sequence> {
    if a.norm() == 0.0 {
        return Err(Error::Parameter("A = 0: the sequence relation needs a nonzero eigenvalue".into()));
    }
    let k_forward = if direction.has_forward() { k } else { 0 };
    let k_backward = if direction.has_backward() { k } else { 0 };
    if k_backward > 0 {
        if let Some(m) = modes.iter().find(|m| m.coeff.norm() > 0.0 && m.eigenvalue.norm() < 1e-14) {
            return Err(Error::UnsupportedScenario(format!(
                "mode at z = {} lies in the kernel of the operator and has no backward preimage",
                m.z
            )));
        }
    }
    let q = op.q();
    let len = radius + op.cost();
    if len >= MAX_PROFILE_LEN {
        return Err(Error::Truncation { needed: len, available: MAX_PROFILE_LEN - 1 });
    }
    let profile = |j: i64| -> RadialFunction {
        let weights: Vec<Complex64> = modes
            .iter()
            .map(|m| match m.coeff.norm() > 0.0 {
                false => Complex64::new(0.0, 0.0),
                true if j >= 0 => (m.eigenvalue / a).powu(j as u32),
                true => (a / m.eigenvalue).powu(j.unsigned_abs() as u32),
            })
            .collect();
        mode_profile(q, modes, &weights, len)
    };

    let indices: Vec<i64> = (-(k_backward as i64)..=k_forward as i64).collect();
    let full: Vec<RadialFunction> = indices.iter().map(|&j| profile(j)).collect();
    let mut relation_residual: f64 = 0.0;
    for pair in full.windows(2) {
        let image = op.apply(&pair[0])?;
        let next = pair[1].scaled(a);
        relation_residual = relation_residual.max(relative(image.valid_sup_diff(&next), next.valid_sup()));
    }
    let iterates = full.iter().map(|f| restrict(f, radius)).collect();
    Ok(Sequence { indices, iterates, k_forward, k_backward, relation_residual })
}
