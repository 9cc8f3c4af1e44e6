//! Truncated homogeneous trees.
//!
//! Vertices are numbered breadth-first from the root `o = 0`. Level `n` occupies
//! the index range `offsets[n]..offsets[n + 1]`, and the children of a vertex form
//! a contiguous range in the next level, so spheres and balls around the root are
//! plain range scans. A tree of radius 16 with `q = 2` has 196 606 vertices; a
//! complex vertex function on it needs about 3 MB.

use crate::error::{Error, Result};
use std::ops::Range;

/// Default upper bound on the truncation radius.
pub const DEFAULT_RADIUS_CAP: usize = 16;

#[derive(Debug, Clone)]
pub struct TreeGeometry {
    q: usize,
    radius: usize,
    offsets: Vec<usize>,
    parent: Vec<u32>,
    level: Vec<u8>,
}

/// Number of vertices at distance `n` from any vertex: 1 for `n = 0`, else `(q+1)q^(n-1)`.
pub fn sphere_size(q: usize, n: usize) -> u64 {
    if n == 0 {
        1
    } else {
        (q as u64 + 1) * (q as u64).pow(n as u32 - 1)
    }
}

pub fn ball_size(q: usize, n: usize) -> u64 {
    (0..=n).map(|k| sphere_size(q, k)).sum()
}

/// A boundary sector `E(anchor)`: all rays from the root through `anchor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub anchor: usize,
    pub depth: usize,
    pub mass: f64,
}

impl TreeGeometry {
    pub fn new(q: usize, radius: usize) -> Result<Self> {
        Self::with_cap(q, radius, DEFAULT_RADIUS_CAP)
    }

    pub fn with_cap(q: usize, radius: usize, cap: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::Parameter(format!("q = {q}: branching parameter must be >= 2")));
        }
        if radius < 1 || radius > cap {
            return Err(Error::Parameter(format!(
                "R = {radius}: truncation radius must satisfy 1 <= R <= {cap}"
            )));
        }
        let mut offsets = Vec::with_capacity(radius + 2);
        offsets.push(0);
        for n in 0..=radius {
            let size = sphere_size(q, n) as usize;
            offsets.push(offsets[n] + size);
        }
        let count = offsets[radius + 1];
        if count > u32::MAX as usize {
            return Err(Error::Parameter(format!("tree with {count} vertices is too large")));
        }
        let mut parent = vec![0u32; count];
        let mut level = vec![0u8; count];
        for n in 1..=radius {
            for v in offsets[n]..offsets[n + 1] {
                level[v] = n as u8;
                let k = v - offsets[n];
                parent[v] = if n == 1 { 0 } else { (offsets[n - 1] + k / q) as u32 };
            }
        }
        Ok(Self { q, radius, offsets, parent, level })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets[self.radius + 1]
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Index range of the sphere `S(o, n)`.
    pub fn sphere(&self, n: usize) -> Range<usize> {
        self.offsets[n]..self.offsets[n + 1]
    }

    /// Index range of the ball `B(o, n)`.
    pub fn ball(&self, n: usize) -> Range<usize> {
        0..self.offsets[n.min(self.radius) + 1]
    }

    pub fn check(&self, x: usize) -> Result<()> {
        if x < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::Index { index: x, count: self.vertex_count() })
        }
    }

    #[inline]
    pub fn level(&self, x: usize) -> usize {
        self.level[x] as usize
    }

    #[inline]
    pub fn parent(&self, x: usize) -> Option<usize> {
        (x != 0).then(|| self.parent[x] as usize)
    }

    pub fn children(&self, x: usize) -> Range<usize> {
        let n = self.level(x);
        if n == self.radius {
            return 0..0;
        }
        if n == 0 {
            return self.offsets[1]..self.offsets[2];
        }
        let k = x - self.offsets[n];
        let start = self.offsets[n + 1] + k * self.q;
        start..start + self.q
    }

    /// Neighbours present in the truncated tree.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent(x).into_iter().chain(self.children(x))
    }

    /// The vertex at level `k` on the geodesic from the root to `x`.
    pub fn ancestor_at(&self, x: usize, k: usize) -> usize {
        let mut v = x;
        for _ in k..self.level(x) {
            v = self.parent[v] as usize;
        }
        v
    }

    pub(crate) fn lca(&self, x: usize, y: usize) -> usize {
        let (mut a, mut b) = (x, y);
        let (la, lb) = (self.level(a), self.level(b));
        if la > lb {
            a = self.ancestor_at(a, lb);
        } else if lb > la {
            b = self.ancestor_at(b, la);
        }
        while a != b {
            a = self.parent[a] as usize;
            b = self.parent[b] as usize;
        }
        a
    }

    pub(crate) fn dist(&self, x: usize, y: usize) -> usize {
        let c = self.lca(x, y);
        self.level(x) + self.level(y) - 2 * self.level(c)
    }

    pub fn distance(&self, x: usize, y: usize) -> Result<usize> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.dist(x, y))
    }

    /// Last common vertex of the geodesics `o -> x` and `o -> y`.
    pub fn confluence(&self, x: usize, y: usize) -> Result<usize> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.lca(x, y))
    }

    /// Size of `G_{j,n}(x) = {y : c(x,y) = x_j, d(x_j, y) = n}` in the infinite tree.
    ///
    /// At the root the whole sphere `S(o, n)` branches off at `x_0`.
    pub fn gjn_count(&self, x: usize, j: usize, n: usize) -> Result<u64> {
        self.check(x)?;
        let m = self.level(x);
        if j > m {
            return Err(Error::Parameter(format!("j = {j} must satisfy 0 <= j <= |x| = {m}")));
        }
        Ok(gjn_size(self.q, m, j, n))
    }

    pub fn sectors(&self, depth: usize) -> Result<Vec<Sector>> {
        if depth < 1 || depth > self.radius {
            return Err(Error::Parameter(format!(
                "sector depth D = {depth} must satisfy 1 <= D <= R = {}",
                self.radius
            )));
        }
        let mass = sector_mass(self.q, depth);
        Ok(self.sphere(depth).map(|anchor| Sector { anchor, depth, mass }).collect())
    }

    /// `h_w(x) = 2|c(x, w)| - |x|` for a vertex no deeper than the sector.
    pub fn height(&self, x: usize, sector: &Sector) -> Result<i64> {
        self.check(x)?;
        let level = self.level(x);
        if level > sector.depth {
            return Err(Error::Depth { level, depth: sector.depth });
        }
        let c = self.lca(x, sector.anchor);
        Ok(2 * self.level(c) as i64 - level as i64)
    }
}

/// `#G_{j,n}(x)` for `|x| = m`.
pub(crate) fn gjn_size(q: usize, m: usize, j: usize, n: usize) -> u64 {
    if n == 0 {
        1
    } else if m == 0 {
        sphere_size(q, n)
    } else if j == 0 || j == m {
        (q as u64).pow(n as u32)
    } else {
        (q as u64 - 1) * (q as u64).pow(n as u32 - 1)
    }
}

pub fn sector_mass(q: usize, depth: usize) -> f64 {
    1.0 / ((q as f64 + 1.0) * (q as f64).powi(depth as i32 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_counts() {
        assert_eq!(TreeGeometry::new(2, 1).unwrap().vertex_count(), 4);
        assert_eq!(TreeGeometry::new(2, 3).unwrap().vertex_count(), 22);
        assert_eq!(TreeGeometry::new(3, 2).unwrap().vertex_count(), 17);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(TreeGeometry::new(1, 3), Err(Error::Parameter(_))));
        assert!(matches!(TreeGeometry::new(2, 0), Err(Error::Parameter(_))));
        assert!(matches!(TreeGeometry::new(2, 17), Err(Error::Parameter(_))));
        assert!(TreeGeometry::with_cap(2, 17, 17).is_ok());
    }

    #[test]
    fn sphere_sizes() {
        assert_eq!(sphere_size(2, 0), 1);
        assert_eq!(sphere_size(2, 3), 12);
        assert_eq!(sphere_size(3, 2), 12);
    }

    #[test]
    fn child_structure() {
        let g = TreeGeometry::new(3, 4).unwrap();
        assert_eq!(g.children(0).len(), 4);
        for x in g.ball(3).skip(1) {
            assert_eq!(g.children(x).len(), 3);
            for c in g.children(x) {
                assert_eq!(g.parent(c), Some(x));
                assert_eq!(g.level(c), g.level(x) + 1);
            }
        }
        assert!(g.children(g.vertex_count() - 1).is_empty());
    }

    #[test]
    fn distances() {
        let g = TreeGeometry::new(2, 4).unwrap();
        assert_eq!(g.distance(0, 0).unwrap(), 0);
        for y in g.sphere(3) {
            assert_eq!(g.distance(0, y).unwrap(), 3);
        }
        assert_eq!(g.distance(1, 2).unwrap(), 2);
        assert!(matches!(g.distance(0, 10_000), Err(Error::Index { .. })));
    }

    #[test]
    fn confluence_basics() {
        let g = TreeGeometry::new(2, 4).unwrap();
        let x = g.sphere(3).start + 5;
        assert_eq!(g.confluence(x, x).unwrap(), x);
        assert_eq!(g.confluence(0, x).unwrap(), 0);
        assert_eq!(g.confluence(x, 0).unwrap(), 0);
    }

    #[test]
    fn gjn_examples() {
        let g = TreeGeometry::new(2, 8).unwrap();
        let x = g.sphere(3).start;
        assert_eq!(g.gjn_count(x, 2, 0).unwrap(), 1);
        assert_eq!(g.gjn_count(x, 0, 2).unwrap(), 4);
        assert_eq!(g.gjn_count(x, 1, 2).unwrap(), 2);
        assert!(matches!(g.gjn_count(x, 4, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn sector_masses() {
        let g = TreeGeometry::new(2, 5).unwrap();
        let s1 = g.sectors(1).unwrap();
        assert_eq!(s1.len(), 3);
        assert!((s1[0].mass - 1.0 / 3.0).abs() < 1e-15);
        let s2 = g.sectors(2).unwrap();
        assert_eq!(s2.len(), 6);
        assert!((s2[0].mass - 1.0 / 6.0).abs() < 1e-15);
        for d in 1..=5 {
            let total: f64 = g.sectors(d).unwrap().iter().map(|s| s.mass).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(g.sectors(0).is_err());
        assert!(g.sectors(6).is_err());
    }

    #[test]
    fn heights() {
        let g = TreeGeometry::new(2, 4).unwrap();
        let sectors = g.sectors(3).unwrap();
        let w = sectors[7];
        assert_eq!(g.height(0, &w).unwrap(), 0);
        for k in 0..=3 {
            assert_eq!(g.height(g.ancestor_at(w.anchor, k), &w).unwrap(), k as i64);
        }
        // level-2 vertex below a different child of the root
        let off = g
            .sphere(2)
            .find(|&x| g.ancestor_at(x, 1) != g.ancestor_at(w.anchor, 1))
            .unwrap();
        assert_eq!(g.height(off, &w).unwrap(), -2);
        let deep = g.sphere(4).start;
        assert!(matches!(g.height(deep, &w), Err(Error::Depth { level: 4, depth: 3 })));
    }
}
