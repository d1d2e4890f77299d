//! Point clouds with known intrinsic dimension, used to validate the
//! estimators.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `n` points uniform on the flat `d`-torus, embedded in `2d` dimensions as
/// a product of unit circles. No boundary, so no edge effects.
pub fn uniform_torus(d: usize, n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Array2::zeros((n, 2 * d));
    for i in 0..n {
        for k in 0..d {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            p[[i, 2 * k]] = t.cos();
            p[[i, 2 * k + 1]] = t.sin();
        }
    }
    p
}

/// `n` points uniform in arc length on a constant-speed curve in
/// `ambient` dimensions (a sum of circles with frequencies 1, 2, ...).
pub fn smooth_curve(n: usize, ambient: usize, seed: u64) -> Array2<f64> {
    assert!(ambient >= 2, "a curve needs at least two ambient dimensions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs = ambient / 2;
    let phases: Vec<f64> = (0..freqs).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let mut p = Array2::zeros((n, ambient));
    for i in 0..n {
        let t: f64 = rng.random_range(0.0..1.0);
        for (k, ph) in phases.iter().enumerate() {
            let w = (k + 1) as f64;
            p[[i, 2 * k]] = (w * t + ph).cos() / w;
            p[[i, 2 * k + 1]] = (w * t + ph).sin() / w;
        }
    }
    p
}

/// `n` points uniform in the unit `d`-cube, mapped isometrically into
/// `ambient` dimensions by a random orthonormal frame.
pub fn uniform_patch(d: usize, n: usize, ambient: usize, seed: u64) -> Array2<f64> {
    assert!(ambient >= d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cube = Array2::from_shape_fn((n, d), |_| rng.random_range(0.0..1.0));
    cube.dot(&random_frame(d, ambient, &mut rng))
}

/// `d` orthonormal rows in `ambient` dimensions (Gram-Schmidt on Gaussians).
pub fn random_frame(d: usize, ambient: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut f = Array2::<f64>::zeros((d, ambient));
    for i in 0..d {
        loop {
            let mut v: Vec<f64> = (0..ambient).map(|_| rng.sample(StandardNormal)).collect();
            for j in 0..i {
                let dot: f64 = v.iter().zip(f.row(j)).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(f.row(j)).for_each(|(a, b)| *a -= dot * b);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                f.row_mut(i).iter_mut().zip(&v).for_each(|(a, b)| *a = b / norm);
                break;
            }
        }
    }
    f
}

/// Isotropic standard Gaussian sample.
pub fn gaussian(n: usize, dim: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, dim), |_| rng.sample(StandardNormal))
}

/// Ratios drawn from `f(mu) = d mu^(-d-1)` by inverting its CDF.
pub fn pareto_ratios(d: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(0.0..1.0);
            (1.0 - u).powf(-1.0 / d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_orthonormal_and_tori_lie_on_circles() {
        let c = smooth_curve(3, 6, 1);
        assert_eq!(c.dim(), (3, 6));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = random_frame(3, 7, &mut rng);
        let g = f.dot(&f.t());
        for i in 0..3 {
            for j in 0..3 {
                assert!((g[[i, j]] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let t = uniform_torus(2, 5, 2);
        for r in t.rows() {
            assert!((r[0] * r[0] + r[1] * r[1] - 1.0).abs() < 1e-12);
        }
    }
}
