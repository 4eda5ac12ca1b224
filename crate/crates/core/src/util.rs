//! Deterministic reductions and seeded sampling helpers.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Pairwise (tree) summation. Deterministic for a fixed slice order and much
/// lower rounding error than a running sum.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    if xs.len() <= 8 {
        let mut acc = T::zero();
        for &x in xs {
            acc = acc + x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn pairwise_sum_complex<T: Scalar>(xs: &[Complex<T>]) -> Complex<T> {
    if xs.len() <= 8 {
        let mut acc = Complex::new(T::zero(), T::zero());
        for &x in xs {
            acc = acc + x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
    }
}

/// Pairwise mean of equally sized vectors (e.g. per-sample grid fields).
/// The reduction tree depends only on the number of items, never on
/// scheduling, so Monte Carlo averages are bit-identical across thread counts.
pub fn pairwise_mean_vectors<T: Scalar>(items: &[Vec<Complex<T>>]) -> Vec<Complex<T>> {
    fn sum_tree<T: Scalar>(items: &[Vec<Complex<T>>]) -> Vec<Complex<T>> {
        match items.len() {
            0 => Vec::new(),
            1 => items[0].clone(),
            n => {
                let mid = n / 2;
                let mut left = sum_tree(&items[..mid]);
                let right = sum_tree(&items[mid..]);
                for (l, r) in left.iter_mut().zip(right.iter()) {
                    *l = *l + *r;
                }
                left
            }
        }
    }
    let mut total = sum_tree(items);
    let inv = T::one() / T::from_usize_lossy(items.len().max(1));
    for v in total.iter_mut() {
        *v = Complex::new(v.re * inv, v.im * inv);
    }
    total
}

/// Counter-based per-sample RNG: stream `index` of a ChaCha generator seeded
/// by `seed`. Samples are independent and reproducible regardless of the
/// order in which worker threads pick them up.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform point on the unit sphere S^{d-1}: normalized standard Gaussians.
pub fn sample_sphere<T: Scalar, R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<T> {
    loop {
        let g: Vec<T> = (0..d).map(|_| T::standard_normal(rng)).collect();
        let norm = g.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > T::from_f64_lossy(1e-12) {
            return g.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform point on S^{2d-1} viewed as d complex components.
pub fn sample_complex_sphere<T: Scalar, R: rand::Rng + ?Sized>(
    d: usize,
    rng: &mut R,
) -> Vec<Complex<T>> {
    let real = sample_sphere::<T, R>(2 * d, rng);
    real.chunks(2).map(|c| Complex::new(c[0], c[1])).collect()
}

/// Ordinary least-squares slope of y against x.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (1..=1000).map(|i| 1.0 / i as f64).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn sphere_points_are_unit() {
        let mut rng = sample_rng(7, 0);
        for d in 1..=8 {
            let p = sample_sphere::<f64, _>(d, &mut rng);
            let n2: f64 = p.iter().map(|x| x * x).sum();
            assert!((n2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_sphere_points_are_unit() {
        let mut rng = sample_rng(7, 1);
        let z = sample_complex_sphere::<f64, _>(3, &mut rng);
        let n2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        assert!((n2 - 1.0).abs() < 1e-12);
        assert_eq!(z.len(), 3);
    }

    #[test]
    fn per_sample_rng_is_scheduling_independent() {
        let a: f64 = Scalar::standard_normal(&mut sample_rng(3, 5));
        let _burn: f64 = Scalar::standard_normal(&mut sample_rng(3, 4));
        let b: f64 = Scalar::standard_normal(&mut sample_rng(3, 5));
        assert_eq!(a, b);
    }

    #[test]
    fn slope_of_line_recovered() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 0.5, 0.0, -0.5];
        assert!((regression_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }
}
