use crate::error::{Error, Result};
use crate::tree::{sphere_size, TreeGeometry};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Remaining valid radius after an operation that consumes `by` levels.
pub fn shrink(valid: Option<usize>, by: usize) -> Option<usize> {
    valid.and_then(|r| r.checked_sub(by))
}

/// Functions that multiplier operators act on.
///
/// Values at levels beyond [`Operand::valid_radius`] are still stored but are
/// not trustworthy: stencils at the truncation boundary only see the neighbours
/// present in the truncated tree.
pub trait Operand: Clone + Send + Sync {
    fn q(&self) -> usize;
    /// Deepest stored level.
    fn radius(&self) -> usize;
    fn valid_radius(&self) -> Option<usize>;
    fn set_valid_radius(&mut self, valid: Option<usize>);
    fn coefficients(&self) -> &[Complex64];
    fn coefficients_mut(&mut self) -> &mut [Complex64];
    /// Tree level of storage slot `idx`.
    fn level_of(&self, idx: usize) -> usize;
    /// Number of vertices represented by storage slot `idx`.
    fn multiplicity(&self, idx: usize) -> f64;
    /// `S_1 f`: mean over the `q+1` neighbours. Shrinks the valid radius by one.
    fn neighbour_mean(&self) -> Self;
    /// `f * k` for a radial kernel. Shrinks the valid radius by the kernel support.
    fn convolve(&self, kernel: &RadialFunction) -> Self;

    fn laplacian(&self) -> Self {
        let mut out = self.neighbour_mean();
        let valid = out.valid_radius();
        out.coefficients_mut()
            .par_iter_mut()
            .zip(self.coefficients().par_iter())
            .for_each(|(o, f)| *o = f - *o);
        out.set_valid_radius(valid);
        out
    }

    fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.coefficients_mut().iter_mut().for_each(|v| *v = ZERO);
        out
    }

    fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.coefficients_mut().par_iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self += a * x`; the valid radius becomes the smaller of the two.
    fn axpy(&mut self, a: Complex64, x: &Self) {
        let valid = match (self.valid_radius(), x.valid_radius()) {
            (Some(u), Some(v)) => Some(u.min(v)),
            _ => None,
        };
        self.coefficients_mut()
            .par_iter_mut()
            .zip(x.coefficients().par_iter())
            .for_each(|(s, v)| *s += a * v);
        self.set_valid_radius(valid);
    }

    /// Sup norm over valid slots; zero when nothing is valid.
    fn valid_sup(&self) -> f64 {
        let Some(valid) = self.valid_radius() else { return 0.0 };
        self.coefficients()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.level_of(*i) <= valid)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Sup norm of `self - other` over slots valid in both.
    fn valid_sup_diff(&self, other: &Self) -> f64 {
        let valid = match (self.valid_radius(), other.valid_radius()) {
            (Some(u), Some(v)) => u.min(v),
            _ => return 0.0,
        };
        self.coefficients()
            .iter()
            .zip(other.coefficients())
            .enumerate()
            .filter(|(i, _)| self.level_of(*i) <= valid)
            .map(|(_, (a, b))| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Radial function stored by level, `values[n] = f(|x| = n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    pub q: usize,
    pub values: Vec<Complex64>,
    pub valid_radius: Option<usize>,
}

impl RadialFunction {
    pub fn new(q: usize, values: Vec<Complex64>) -> Result<Self> {
        if q < 2 {
            return Err(Error::Parameter(format!("q = {q}: branching parameter must be >= 2")));
        }
        if values.is_empty() {
            return Err(Error::Parameter("radial function needs at least the value at the root".into()));
        }
        let valid_radius = Some(values.len() - 1);
        Ok(Self { q, values, valid_radius })
    }

    pub fn from_fn(q: usize, radius: usize, f: impl Fn(usize) -> Complex64) -> Self {
        Self { q, values: (0..=radius).map(f).collect(), valid_radius: Some(radius) }
    }

    pub fn delta(q: usize) -> Self {
        Self { q, values: vec![Complex64::new(1.0, 0.0)], valid_radius: Some(0) }
    }

    /// Deepest level with a nonzero value.
    pub fn support(&self) -> Option<usize> {
        self.values.iter().rposition(|v| *v != ZERO)
    }

    pub fn get(&self, n: usize) -> Complex64 {
        self.values.get(n).copied().unwrap_or(ZERO)
    }

    /// Drop trailing zeros, keeping at least the root value.
    pub fn trimmed(mut self) -> Self {
        let keep = self.support().unwrap_or(0) + 1;
        self.values.truncate(keep);
        self.valid_radius = self.valid_radius.map(|v| v.min(keep - 1));
        self
    }

    /// Copy extended with zeros (or truncated) to `radius`.
    pub fn resized(&self, radius: usize) -> Self {
        let mut values = self.values.clone();
        values.resize(radius + 1, ZERO);
        Self { q: self.q, values, valid_radius: self.valid_radius.map(|v| v.min(radius)) }
    }
}

impl Operand for RadialFunction {
    fn q(&self) -> usize {
        self.q
    }

    fn radius(&self) -> usize {
        self.values.len() - 1
    }

    fn valid_radius(&self) -> Option<usize> {
        self.valid_radius
    }

    fn set_valid_radius(&mut self, valid: Option<usize>) {
        self.valid_radius = valid;
    }

    fn coefficients(&self) -> &[Complex64] {
        &self.values
    }

    fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    fn level_of(&self, idx: usize) -> usize {
        idx
    }

    fn multiplicity(&self, idx: usize) -> f64 {
        sphere_size(self.q, idx) as f64
    }

    fn neighbour_mean(&self) -> Self {
        let qf = self.q as f64;
        let f = &self.values;
        let last = f.len() - 1;
        let values = (0..=last)
            .map(|n| {
                let outer = if n < last { f[n + 1] } else { ZERO };
                if n == 0 {
                    outer
                } else {
                    (f[n - 1] + qf * outer) / (qf + 1.0)
                }
            })
            .collect();
        Self { q: self.q, values, valid_radius: shrink(self.valid_radius, 1) }
    }

    fn convolve(&self, kernel: &RadialFunction) -> Self {
        let s = kernel.values.len() - 1;
        let values = super::convolution::radial_convolution_values(self.q, &self.values, &kernel.values);
        Self { q: self.q, values, valid_radius: shrink(self.valid_radius, s) }
    }
}

/// Complex function on the vertices of a truncated tree.
#[derive(Debug, Clone)]
pub struct VertexFunction {
    geom: Arc<TreeGeometry>,
    values: Vec<Complex64>,
    valid_radius: Option<usize>,
}

impl VertexFunction {
    pub fn new(geom: Arc<TreeGeometry>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != geom.vertex_count() {
            return Err(Error::Parameter(format!(
                "vertex function has {} values, tree has {} vertices",
                values.len(),
                geom.vertex_count()
            )));
        }
        let valid_radius = Some(geom.radius());
        Ok(Self { geom, values, valid_radius })
    }

    pub fn zeros(geom: Arc<TreeGeometry>) -> Self {
        let values = vec![ZERO; geom.vertex_count()];
        let valid_radius = Some(geom.radius());
        Self { geom, values, valid_radius }
    }

    pub fn from_fn(geom: Arc<TreeGeometry>, f: impl Fn(usize) -> Complex64 + Sync + Send) -> Self {
        let values = (0..geom.vertex_count()).into_par_iter().map(f).collect();
        let valid_radius = Some(geom.radius());
        Self { geom, values, valid_radius }
    }

    pub fn delta(geom: Arc<TreeGeometry>) -> Self {
        let mut f = Self::zeros(geom);
        f.values[0] = Complex64::new(1.0, 0.0);
        f
    }

    /// The radial function `x -> r(|x|)`, zero past the stored radius of `r`.
    pub fn from_radial(geom: Arc<TreeGeometry>, r: &RadialFunction) -> Self {
        let values = (0..geom.vertex_count()).map(|x| r.get(geom.level(x))).collect();
        let valid_radius = if r.values.len() > geom.radius() {
            r.valid_radius.map(|v| v.min(geom.radius()))
        } else {
            Some(geom.radius())
        };
        Self { geom, values, valid_radius }
    }

    pub fn geometry(&self) -> &Arc<TreeGeometry> {
        &self.geom
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, x: usize) -> Result<Complex64> {
        self.geom.check(x)?;
        Ok(self.values[x])
    }

    pub fn with_valid_radius(mut self, valid: Option<usize>) -> Self {
        self.valid_radius = valid;
        self
    }

    pub fn is_valid(&self, x: usize) -> bool {
        self.valid_radius.is_some_and(|r| self.geom.level(x) <= r)
    }

    /// Deepest level carrying a nonzero value.
    pub fn support(&self) -> Option<usize> {
        self.values.iter().rposition(|v| *v != ZERO).map(|x| self.geom.level(x))
    }

    /// Whether values depend only on the level, up to `tol`.
    pub fn is_radial(&self, tol: f64) -> bool {
        (0..=self.geom.radius()).all(|n| {
            let s = self.geom.sphere(n);
            let first = self.values[s.start];
            self.values[s].iter().all(|v| (v - first).norm() <= tol)
        })
    }
}

impl Operand for VertexFunction {
    fn q(&self) -> usize {
        self.geom.q()
    }

    fn radius(&self) -> usize {
        self.geom.radius()
    }

    fn valid_radius(&self) -> Option<usize> {
        self.valid_radius
    }

    fn set_valid_radius(&mut self, valid: Option<usize>) {
        self.valid_radius = valid;
    }

    fn coefficients(&self) -> &[Complex64] {
        &self.values
    }

    fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    fn level_of(&self, idx: usize) -> usize {
        self.geom.level(idx)
    }

    fn multiplicity(&self, _idx: usize) -> f64 {
        1.0
    }

    fn neighbour_mean(&self) -> Self {
        let g = &self.geom;
        let w = 1.0 / (g.q() as f64 + 1.0);
        let values = (0..g.vertex_count())
            .into_par_iter()
            .map(|x| g.neighbors(x).map(|y| self.values[y]).sum::<Complex64>() * w)
            .collect();
        Self { geom: Arc::clone(g), values, valid_radius: shrink(self.valid_radius, 1) }
    }

    fn convolve(&self, kernel: &RadialFunction) -> Self {
        super::convolution::convolve_radial(self, kernel).function
    }
}

#[derive(Serialize, Deserialize)]
struct VertexFunctionData {
    q: usize,
    radius: usize,
    valid_radius: Option<usize>,
    values: Vec<Complex64>,
}

impl Serialize for VertexFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        VertexFunctionData {
            q: self.geom.q(),
            radius: self.geom.radius(),
            valid_radius: self.valid_radius,
            values: self.values.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VertexFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let data = VertexFunctionData::deserialize(deserializer)?;
        let geom = TreeGeometry::with_cap(data.q, data.radius, data.radius.max(1))
            .map_err(D::Error::custom)?;
        let f = VertexFunction::new(Arc::new(geom), data.values).map_err(D::Error::custom)?;
        Ok(f.with_valid_radius(data.valid_radius))
    }
}

/// Piecewise-constant boundary data, one value per depth-`D` sector.
#[derive(Debug, Clone)]
pub struct BoundaryFunction {
    geom: Arc<TreeGeometry>,
    depth: usize,
    values: Vec<Complex64>,
}

impl BoundaryFunction {
    pub fn new(geom: Arc<TreeGeometry>, depth: usize, values: Vec<Complex64>) -> Result<Self> {
        let count = geom.sectors(depth)?.len();
        if values.len() != count {
            return Err(Error::Parameter(format!(
                "boundary function has {} values, depth {depth} has {count} sectors",
                values.len()
            )));
        }
        Ok(Self { geom, depth, values })
    }

    pub fn constant(geom: Arc<TreeGeometry>, depth: usize, c: Complex64) -> Result<Self> {
        let count = geom.sectors(depth)?.len();
        Self::new(geom, depth, vec![c; count])
    }

    pub fn geometry(&self) -> &Arc<TreeGeometry> {
        &self.geom
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `int F dnu`.
    pub fn integral(&self) -> Complex64 {
        let mass = crate::tree::sector_mass(self.geom.q(), self.depth);
        self.values.iter().sum::<Complex64>() * mass
    }

    /// Discrete `L^r(nu)` norm; `r = inf` gives the sup.
    pub fn lr_norm(&self, r: f64) -> f64 {
        if r.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let mass = crate::tree::sector_mass(self.geom.q(), self.depth);
        (self.values.iter().map(|v| v.norm().powf(r)).sum::<f64>() * mass).powf(1.0 / r)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    index: usize,
    re: f64,
    im: f64,
}

/// Write values as CSV with columns `index,re,im`.
pub fn write_csv<W: Write>(values: &[Complex64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (index, v) in values.iter().enumerate() {
        w.serialize(CsvRow { index, re: v.re, im: v.im })?;
    }
    w.flush()?;
    Ok(())
}

/// Read `index,re,im` CSV; indices must run `0, 1, 2, ...`.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<Complex64>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: CsvRow = row?;
        if row.index != out.len() {
            return Err(Error::Parameter(format!(
                "csv index {} out of sequence (expected {})",
                row.index,
                out.len()
            )));
        }
        out.push(Complex64::new(row.re, row.im));
    }
    Ok(out)
}
