use super::function::{BoundaryFunction, Operand, RadialFunction, VertexFunction};
use crate::error::{Error, Result};
use crate::spectral::{phi_table, I};
use crate::tree::{sector_mass, sphere_size, Sector, TreeGeometry};
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// Mean of `f` over each sphere `S(o, n)`.
pub fn radialize(f: &VertexFunction) -> RadialFunction {
    let g = f.geometry();
    let values = (0..=g.radius())
        .map(|n| {
            let s = g.sphere(n);
            let len = s.len() as f64;
            f.values()[s].iter().sum::<Complex64>() / len
        })
        .collect();
    RadialFunction { q: g.q(), values, valid_radius: f.valid_radius() }
}

/// `f^(z) = sum_n f(n) #S(n) phi_z(n)`.
pub fn spherical_ft(f: &RadialFunction, z: Complex64) -> Complex64 {
    let table = phi_table(f.q, z, f.values.len() - 1);
    f.values
        .iter()
        .zip(table)
        .enumerate()
        .map(|(n, (v, p))| v * p * sphere_size(f.q, n) as f64)
        .sum()
}

/// `q^((1/2 + iz) h)` for every height `h in [-depth, depth]`, indexed by `h + depth`.
fn kernel_powers(q: usize, z: Complex64, depth: usize) -> Vec<Complex64> {
    let lq = (q as f64).ln();
    let s = Complex64::new(0.5, 0.0) + I * z;
    (0..=2 * depth)
        .map(|k| (s * (k as f64 - depth as f64) * lq).exp())
        .collect()
}

/// `f~(z, w) = sum_x f(x) q^((1/2 + iz) h_w(x))` for `f` supported in `B(o, D)`.
pub fn helgason_ft(f: &VertexFunction, z: Complex64, sector: &Sector) -> Result<Complex64> {
    let g = f.geometry();
    if let Some(level) = f.support() {
        if level > sector.depth {
            return Err(Error::Depth { level, depth: sector.depth });
        }
    }
    g.check(sector.anchor)?;
    let pw = kernel_powers(g.q(), z, sector.depth);
    let d = sector.depth as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for x in g.ball(sector.depth) {
        let v = f.values()[x];
        if v != Complex64::new(0.0, 0.0) {
            let h = g.height(x, sector)?;
            acc += v * pw[(h + d) as usize];
        }
    }
    Ok(acc)
}

/// `P_z F(x)` at a single vertex with `|x| <= D`.
pub fn poisson_at(f: &BoundaryFunction, z: Complex64, x: usize) -> Result<Complex64> {
    let g = f.geometry();
    g.check(x)?;
    let depth = f.depth();
    let level = g.level(x);
    if level > depth {
        return Err(Error::Depth { level, depth });
    }
    let pw = kernel_powers(g.q(), z, depth);
    Ok(poisson_row(g, depth, x, &pw, f.values()))
}

fn poisson_row(g: &TreeGeometry, depth: usize, x: usize, pw: &[Complex64], values: &[Complex64]) -> Complex64 {
    let mass = sector_mass(g.q(), depth);
    let level = g.level(x) as i64;
    g.sphere(depth)
        .zip(values)
        .map(|(anchor, v)| {
            let h = 2 * g.level(g.lca(x, anchor)) as i64 - level;
            v * pw[(h + depth as i64) as usize]
        })
        .sum::<Complex64>()
        * mass
}

/// `P_z F` on the ball `B(o, D)`, returned on a tree of radius `D`.
pub fn poisson_transform(f: &BoundaryFunction, z: Complex64) -> Result<VertexFunction> {
    let depth = f.depth();
    let g = f.geometry();
    let pw = kernel_powers(g.q(), z, depth);
    let target = if g.radius() == depth {
        Arc::clone(g)
    } else {
        Arc::new(TreeGeometry::with_cap(g.q(), depth, depth)?)
    };
    // BFS order is a prefix property, so indices below `offsets[D+1]` coincide
    let values: Vec<Complex64> = (0..target.vertex_count())
        .into_par_iter()
        .map(|x| poisson_row(g, depth, x, &pw, f.values()))
        .collect();
    VertexFunction::new(target, values)
}

/// Dense matrix `M[x][w] = mass * q^((1/2+iz) h_w(x))` for `|x| <= D` (rows) and depth-`D` sectors (columns).
pub fn poisson_matrix(g: &TreeGeometry, z: Complex64, depth: usize) -> Result<Vec<Vec<Complex64>>> {
    let sectors = g.sectors(depth)?;
    let pw = kernel_powers(g.q(), z, depth);
    let mass = sector_mass(g.q(), depth);
    Ok(g.ball(depth)
        .into_par_iter()
        .map(|x| {
            let level = g.level(x) as i64;
            sectors
                .iter()
                .map(|s| {
                    let h = 2 * g.level(g.lca(x, s.anchor)) as i64 - level;
                    pw[(h + depth as i64) as usize] * mass
                })
                .collect()
        })
        .collect())
}

/// `<f, g> = sum_x f(x) g(x)`, no conjugation.
pub fn pairing<O: Operand>(f: &O, g: &O) -> Complex64 {
    f.coefficients()
        .iter()
        .zip(g.coefficients())
        .enumerate()
        .map(|(i, (a, b))| a * b * f.multiplicity(i))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gamma, period, phi};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn radialize_basics() {
        let g = Arc::new(TreeGeometry::new(2, 4).unwrap());
        let one = VertexFunction::from_fn(g.clone(), |_| c(1.0, 0.0));
        assert!(radialize(&one).values.iter().all(|v| *v == c(1.0, 0.0)));
        let r = RadialFunction::from_fn(2, 4, |n| c(n as f64, -1.0));
        let back = radialize(&VertexFunction::from_radial(g, &r));
        for (a, b) in back.values.iter().zip(&r.values) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn radialization_preserves_pairing_with_radial() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Arc::new(TreeGeometry::new(2, 6).unwrap());
        for _ in 0..100 {
            let f = VertexFunction::new(g.clone(), (0..g.vertex_count()).map(|_| rand_c(&mut rng)).collect()).unwrap();
            let r = RadialFunction::new(2, (0..=6).map(|_| rand_c(&mut rng)).collect()).unwrap();
            let rv = VertexFunction::from_radial(g.clone(), &r);
            let lhs = pairing(&radialize(&f), &r);
            let rhs: Complex64 = f.values().iter().zip(rv.values()).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn spherical_ft_basics() {
        let q = 3;
        let z = c(0.4, 0.2);
        assert!((spherical_ft(&RadialFunction::delta(q), z) - 1.0).norm() < 1e-15);
        let mu1 = RadialFunction::new(q, vec![c(0.0, 0.0), c(0.25, 0.0)]).unwrap();
        assert!((spherical_ft(&mu1, z) - (1.0 - gamma(q, z))).norm() < 1e-14);
        let lap = RadialFunction::new(q, vec![c(1.0, 0.0), c(-0.25, 0.0)]).unwrap();
        let tau = period(q);
        for k in 0..20 {
            let z = c(-tau / 2.0 + k as f64 * tau / 20.0, 0.5 - k as f64 / 19.0);
            assert!((spherical_ft(&lap, z) - gamma(q, z)).norm() < 1e-12);
        }
    }

    #[test]
    fn convolution_theorem() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = 2;
        for _ in 0..20 {
            let f = RadialFunction::new(q, (0..=3).map(|_| rand_c(&mut rng)).collect()).unwrap();
            let k = RadialFunction::new(q, (0..=2).map(|_| rand_c(&mut rng)).collect()).unwrap();
            // enough room for the full support of f * k
            let fk = f.resized(5).convolve(&k);
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-0.5..0.5));
            let lhs = spherical_ft(&fk, z);
            let rhs = spherical_ft(&f, z) * spherical_ft(&k, z);
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn helgason_reduces_to_spherical_on_radial() {
        let g = Arc::new(TreeGeometry::new(2, 5).unwrap());
        let r = RadialFunction::from_fn(2, 4, |n| c(1.0 / (n + 1) as f64, n as f64 * 0.1));
        let f = VertexFunction::from_radial(g.clone(), &r);
        let z = c(0.9, -0.3);
        let expected = spherical_ft(&r, z);
        for s in g.sectors(4).unwrap() {
            let v = helgason_ft(&f, z, &s).unwrap();
            assert!((v - expected).norm() < 1e-10);
            let shifted = helgason_ft(&f, z + period(2), &s).unwrap();
            assert!((shifted - v).norm() < 1e-10);
        }
        let s3 = g.sectors(3).unwrap()[0];
        assert!(matches!(helgason_ft(&f, z, &s3), Err(Error::Depth { level: 4, depth: 3 })));
        let d = VertexFunction::delta(g.clone());
        assert!((helgason_ft(&d, z, &s3).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn poisson_of_constant_is_phi() {
        let g = Arc::new(TreeGeometry::new(2, 6).unwrap());
        let one = BoundaryFunction::constant(g.clone(), 6, c(1.0, 0.0)).unwrap();
        let z = c(0.8, 0.3);
        let pf = poisson_transform(&one, z).unwrap();
        let r = radialize(&pf);
        for n in 0..=4 {
            assert!((r.values[n] - phi(2, z, n)).norm() < 1e-10);
        }
        assert!(pf.is_radial(1e-12));
    }

    #[test]
    fn poisson_eigen_identity_and_root_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = Arc::new(TreeGeometry::new(2, 5).unwrap());
        let n_sec = g.sectors(5).unwrap().len();
        for _ in 0..20 {
            let f = BoundaryFunction::new(g.clone(), 5, (0..n_sec).map(|_| rand_c(&mut rng)).collect()).unwrap();
            let z = c(rng.gen_range(-4.0..4.0), rng.gen_range(-0.5..0.5));
            let pf = poisson_transform(&f, z).unwrap();
            let mut res = pf.laplacian();
            res.axpy(-gamma(2, z), &pf);
            assert!(res.valid_sup() < 1e-10 * pf.valid_sup().max(1.0));
            assert!((pf.values()[0] - f.integral()).norm() < 1e-12);
            assert!((poisson_at(&f, z, 7).unwrap() - pf.values()[7]).norm() < 1e-14);
        }
    }

    #[test]
    fn poisson_depth_errors() {
        let g = Arc::new(TreeGeometry::new(2, 5).unwrap());
        let f = BoundaryFunction::constant(g.clone(), 3, c(1.0, 0.0)).unwrap();
        let deep = g.sphere(4).start;
        assert!(matches!(poisson_at(&f, c(0.0, 0.0), deep), Err(Error::Depth { level: 4, depth: 3 })));
        assert_eq!(poisson_transform(&f, c(0.0, 0.0)).unwrap().geometry().radius(), 3);
    }
}
