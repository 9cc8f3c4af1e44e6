use super::function::{shrink, Operand, RadialFunction, VertexFunction};
use crate::tree::{gjn_size, TreeGeometry};
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Result of a convolution together with its truncation metadata.
#[derive(Debug, Clone)]
pub struct Convolution {
    pub function: VertexFunction,
    /// Set when `supp f + supp k` exceeds the truncation radius, so part of `f * k` fell off the tree.
    pub truncation_loss: bool,
    /// Whether the `G_{j,n}` radial fast path was used.
    pub radial_path: bool,
}

/// `(f * k)(x) = sum_y f(y) k(d(x, y))` over the truncated tree.
pub fn convolve_radial(f: &VertexFunction, k: &RadialFunction) -> Convolution {
    let g = f.geometry();
    let s = k.values.len() - 1;
    let truncation_loss = match (f.support(), k.support()) {
        (Some(a), Some(b)) => a + b > g.radius(),
        _ => false,
    };
    let valid = shrink(f.valid_radius(), s);
    if f.is_radial(0.0) {
        let profile: Vec<Complex64> = (0..=g.radius()).map(|n| f.values()[g.sphere(n).start]).collect();
        let out = radial_convolution_values(g.q(), &profile, &k.values);
        let r = RadialFunction { q: g.q(), values: out, valid_radius: valid };
        let function = VertexFunction::from_radial(Arc::clone(g), &r).with_valid_radius(valid);
        return Convolution { function, truncation_loss, radial_path: true };
    }
    let values: Vec<Complex64> = (0..g.vertex_count())
        .into_par_iter()
        .map(|x| ball_sum(g, x, s, |y, d| f.values()[y] * k.values[d]))
        .collect();
    let function = VertexFunction::new(Arc::clone(g), values)
        .expect("length matches geometry")
        .with_valid_radius(valid);
    Convolution { function, truncation_loss, radial_path: false }
}

/// `sum_{y in B(x, s)} term(y, d(x, y))` by walking the ball around `x`.
pub(crate) fn ball_sum(
    g: &TreeGeometry,
    x: usize,
    s: usize,
    term: impl Fn(usize, usize) -> Complex64,
) -> Complex64 {
    let mut acc = ZERO;
    // (vertex, came-from, distance)
    let mut stack = vec![(x, usize::MAX, 0usize)];
    while let Some((v, from, d)) = stack.pop() {
        acc += term(v, d);
        if d == s {
            continue;
        }
        for w in g.neighbors(v) {
            if w != from {
                stack.push((w, v, d + 1));
            }
        }
    }
    acc
}

/// Radial convolution by the `G_{j,n}` decomposition: for `|x| = m`,
/// `(f * k)(x) = sum_{j <= m} sum_n #G_{j,n}(x) f(j + n) k(m - j + n)`, with `y` restricted to the
/// stored levels of `f`.
pub(crate) fn radial_convolution_values(q: usize, f: &[Complex64], k: &[Complex64]) -> Vec<Complex64> {
    let last = f.len() - 1;
    let s = k.len() - 1;
    (0..=last)
        .into_par_iter()
        .map(|m| {
            let mut acc = ZERO;
            for j in 0..=m {
                // d(x, y) = m - j + n <= s and |y| = j + n <= last
                if m - j > s {
                    continue;
                }
                let n_max = (s - (m - j)).min(last - j);
                for n in 0..=n_max {
                    let count = gjn_size(q, m, j, n) as f64;
                    acc += count * f[j + n] * k[m - j + n];
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(f: &VertexFunction, k: &RadialFunction) -> Vec<Complex64> {
        let g = f.geometry();
        (0..g.vertex_count())
            .map(|x| {
                (0..g.vertex_count())
                    .map(|y| {
                        let d = g.distance(x, y).unwrap();
                        f.values()[y] * k.get(d)
                    })
                    .sum()
            })
            .collect()
    }

    fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn delta_kernel_is_identity() {
        let g = Arc::new(TreeGeometry::new(2, 4).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = VertexFunction::new(g.clone(), (0..g.vertex_count()).map(|_| rand_c(&mut rng)).collect()).unwrap();
        let out = convolve_radial(&f, &RadialFunction::delta(2));
        assert_eq!(out.function.values(), f.values());
        assert_eq!(out.function.valid_radius(), Some(4));
    }

    #[test]
    fn delta_function_gives_kernel() {
        let g = Arc::new(TreeGeometry::new(3, 4).unwrap());
        let k = RadialFunction::new(3, vec![Complex64::new(2.0, 0.0), Complex64::new(-1.0, 0.5), Complex64::new(0.25, 0.0)]).unwrap();
        let out = convolve_radial(&VertexFunction::delta(g.clone()), &k);
        assert!(out.radial_path);
        assert!(!out.truncation_loss);
        for x in 0..g.vertex_count() {
            assert_eq!(out.function.values()[x], k.get(g.level(x)));
        }
    }

    #[test]
    fn fast_path_matches_double_sum_exhaustive_q2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for r in 1..=6 {
            let g = Arc::new(TreeGeometry::new(2, r).unwrap());
            for s in 0..=r {
                let prof = RadialFunction::new(2, (0..=r).map(|_| rand_c(&mut rng)).collect()).unwrap();
                let k = RadialFunction::new(2, (0..=s).map(|_| rand_c(&mut rng)).collect()).unwrap();
                let f = VertexFunction::from_radial(g.clone(), &prof);
                let fast = convolve_radial(&f, &k);
                assert!(fast.radial_path);
                let slow = brute(&f, &k);
                for (a, b) in fast.function.values().iter().zip(&slow) {
                    assert!((a - b).norm() < 1e-10, "R={r} s={s}");
                }
            }
        }
    }

    #[test]
    fn general_path_matches_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Arc::new(TreeGeometry::new(2, 5).unwrap());
        let f = VertexFunction::new(g.clone(), (0..g.vertex_count()).map(|_| rand_c(&mut rng)).collect()).unwrap();
        let k = RadialFunction::new(2, (0..=3).map(|_| rand_c(&mut rng)).collect()).unwrap();
        let fast = convolve_radial(&f, &k);
        assert!(!fast.radial_path);
        assert!(fast.truncation_loss);
        assert_eq!(fast.function.valid_radius(), Some(2));
        for (a, b) in fast.function.values().iter().zip(&brute(&f, &k)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fast_path_matches_double_sum_q3(seed in any::<u64>(), r in 1usize..=4, s in 0usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Arc::new(TreeGeometry::new(3, r).unwrap());
            let prof = RadialFunction::new(3, (0..=r).map(|_| rand_c(&mut rng)).collect()).unwrap();
            let k = RadialFunction::new(3, (0..=s).map(|_| rand_c(&mut rng)).collect()).unwrap();
            let f = VertexFunction::from_radial(g, &prof);
            let fast = convolve_radial(&f, &k);
            for (a, b) in fast.function.values().iter().zip(&brute(&f, &k)) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
