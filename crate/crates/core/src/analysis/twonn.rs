//! Intrinsic dimension from nearest-neighbour distance ratios.
//!
//! For locally uniform data the ratio `mu = r2 / r1` is Pareto distributed,
//! `f(mu) = d mu^(-d-1)`, so `-ln(1 - P(mu)) = d ln(mu)`.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::neighbors::neighbor_ratios;
use crate::error::{Error, Result};

/// Fraction of the largest ratios left out of the fit.
pub const TAIL_DISCARD: f64 = 0.02;
pub const MIN_POINTS: usize = 10;
/// Fewest ratios a two-slope window may hold.
pub const MIN_WINDOW_POINTS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdEstimate {
    pub dimension: f64,
    /// Root-mean-square deviation of the fitted line.
    pub residual: f64,
    pub n_points: usize,
    /// Sorted ratios that entered the fit.
    pub mu: Vec<f64>,
}

pub fn twonn_id(points: &ArrayView2<f64>) -> Result<IdEstimate> {
    if points.nrows() < MIN_POINTS {
        return Err(Error::arg(format!(
            "intrinsic dimension needs at least {MIN_POINTS} points, got {}",
            points.nrows()
        )));
    }
    let mu = neighbor_ratios(points)?;
    twonn_from_ratios(&mu)
}

/// Fit through the origin of `-ln(1 - i/n)` against `ln(mu_(i))`.
pub fn twonn_from_ratios(mu: &[f64]) -> Result<IdEstimate> {
    let n = mu.len();
    if n < MIN_POINTS {
        return Err(Error::arg(format!("need at least {MIN_POINTS} ratios, got {n}")));
    }
    if mu.iter().any(|m| !(m.is_finite() && *m >= 1.0)) {
        return Err(Error::arg("neighbour ratios must be finite and at least 1"));
    }
    let mut sorted = mu.to_vec();
    sorted.sort_by(f64::total_cmp);
    let keep = ((n as f64) * (1.0 - TAIL_DISCARD)).floor() as usize;
    sorted.truncate(keep);
    let pts: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .map(|(i, m)| (m.ln(), -(1.0 - (i + 1) as f64 / n as f64).ln()))
        .collect();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateData { indices: Vec::new() });
    }
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let d = sxy / sxx;
    let residual = (pts.iter().map(|(x, y)| (y - d * x).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    Ok(IdEstimate {
        dimension: d,
        residual,
        n_points: n,
        mu: sorted,
    })
}

/// A ratio window `lo <= mu < hi`; `hi = inf` runs to the fit cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuWindow {
    pub lo: f64,
    pub hi: f64,
}

impl MuWindow {
    pub fn new(lo: f64, hi: f64) -> Self {
        MuWindow { lo, hi }
    }
}

/// Short-scale and large-scale windows `mu < 1.5` and `mu > 2`.
pub fn default_windows() -> Vec<MuWindow> {
    vec![MuWindow::new(1.0, 1.5), MuWindow::new(2.0, f64::INFINITY)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSlope {
    pub window: MuWindow,
    /// Log-log slope of the density, `-(d + 1)` for a pure power law.
    pub slope: f64,
    /// Dimension implied by the slope.
    pub dimension: f64,
    pub n_points: usize,
    pub bins: usize,
}

pub fn two_slope_analysis(points: &ArrayView2<f64>, windows: &[MuWindow]) -> Result<Vec<WindowSlope>> {
    let mu = neighbor_ratios(points)?;
    two_slope_from_ratios(&mu, windows)
}

/// Power-law slope of the empirical ratio density inside each window.
///
/// Each window gets its own equal-width bins in `ln(mu)`, which keeps the
/// slope of a pure power law unbiased. The log densities are fitted by
/// least squares weighted with the bin counts; empty bins are skipped.
/// Open windows stop at the same tail cutoff as [`twonn_id`].
pub fn two_slope_from_ratios(mu: &[f64], windows: &[MuWindow]) -> Result<Vec<WindowSlope>> {
    if windows.is_empty() {
        return Err(Error::arg("no ratio windows given"));
    }
    let mut sorted = mu.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n < MIN_POINTS {
        return Err(Error::arg(format!("need at least {MIN_POINTS} ratios, got {n}")));
    }
    let cutoff = sorted[((n as f64) * (1.0 - TAIL_DISCARD)).floor() as usize - 1];
    windows
        .iter()
        .map(|w| {
            if !(w.lo >= 1.0 && w.hi > w.lo) {
                return Err(Error::arg(format!("invalid ratio window [{}, {})", w.lo, w.hi)));
            }
            let hi = w.hi.min(cutoff);
            let inside: Vec<f64> = sorted.iter().copied().filter(|&m| m >= w.lo && m < hi).collect();
            if inside.len() < MIN_WINDOW_POINTS {
                return Err(Error::arg(format!(
                    "ratio window [{}, {}) holds {} points, need {MIN_WINDOW_POINTS}",
                    w.lo,
                    w.hi,
                    inside.len()
                )));
            }
            let bins = ((inside.len() as f64).sqrt().round() as usize).clamp(4, 25);
            let (a, b) = (w.lo.ln(), hi.ln());
            let width = (b - a) / bins as f64;
            let mut counts = vec![0usize; bins];
            for m in &inside {
                let k = (((m.ln() - a) / width) as usize).min(bins - 1);
                counts[k] += 1;
            }
            // Density per unit mu at the geometric bin centre.
            let pts: Vec<(f64, f64, f64)> = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(k, &c)| {
                    let lo = a + k as f64 * width;
                    let dmu = (lo + width).exp() - lo.exp();
                    (lo + 0.5 * width, (c as f64 / (n as f64 * dmu)).ln(), c as f64)
                })
                .collect();
            if pts.len() < 2 {
                return Err(Error::arg(format!("ratio window [{}, {}) spans a single bin", w.lo, w.hi)));
            }
            let sw: f64 = pts.iter().map(|p| p.2).sum();
            let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
            let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
            let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
            let slope = sxy / sxx;
            Ok(WindowSlope {
                window: *w,
                slope,
                dimension: -slope - 1.0,
                n_points: inside.len(),
                bins,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::synthetic::{pareto_ratios, random_frame, uniform_patch, uniform_torus};
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_ratios_recover_dimension() {
        for d in [1.0, 2.5, 4.0] {
            let est = twonn_from_ratios(&pareto_ratios(d, 20000, 3)).unwrap();
            assert!((est.dimension - d).abs() < 0.05 * d, "{d}: {}", est.dimension);
        }
    }

    #[test]
    fn window_slopes_of_a_power_law() {
        let mu = pareto_ratios(4.0, 20000, 5);
        let w = two_slope_from_ratios(&mu, &[MuWindow::new(1.0, 1.5), MuWindow::new(1.0, f64::INFINITY)]).unwrap();
        for s in &w {
            assert!((s.dimension - 4.0).abs() < 0.1, "{s:?}");
            assert!((s.slope + 5.0).abs() < 0.1);
        }
    }

    #[test]
    fn torus_dimensions() {
        for d in 1..=3 {
            let p = uniform_torus(d, 2000, 11);
            let est = twonn_id(&p.view()).unwrap();
            assert!((est.dimension - d as f64).abs() < 0.1 * d as f64, "{d}: {}", est.dimension);
            assert_eq!(est.n_points, 2000);
        }
    }

    #[test]
    fn empty_window_is_rejected() {
        let mu = pareto_ratios(2.0, 500, 1);
        assert!(two_slope_from_ratios(&mu, &[MuWindow::new(50.0, 60.0)]).is_err());
        assert!(two_slope_from_ratios(&mu, &[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn invariant_under_similarity(seed in 0u64..1000, scale in 0.01f64..100.0) {
            let p = uniform_patch(2, 300, 4, seed);
            let base = twonn_id(&p.view()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let moved = p.dot(&random_frame(4, 4, &mut rng)) * scale;
            let est = twonn_id(&moved.view()).unwrap();
            prop_assert!((est.dimension - base.dimension).abs() < 1e-10);
        }
    }

    #[test]
    fn too_few_points() {
        let p = Array2::from_shape_fn((9, 2), |(i, j)| (i * 3 + j * j) as f64);
        assert!(twonn_id(&p.view()).is_err());
    }
}
