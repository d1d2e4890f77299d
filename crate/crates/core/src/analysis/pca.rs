//! Principal component analysis through the sample covariance.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Pca {
    pub mean: Array1<f64>,
    /// One orthonormal component per row, by decreasing variance.
    pub components: Array2<f64>,
    pub explained_variance: Array1<f64>,
}

impl Pca {
    pub fn explained_ratio(&self) -> Array1<f64> {
        let total = self.explained_variance.sum();
        if total > 0.0 {
            &self.explained_variance / total
        } else {
            Array1::zeros(self.explained_variance.len())
        }
    }

    /// Coordinates of `points` along every component.
    pub fn transform(&self, points: &ArrayView2<f64>) -> Array2<f64> {
        (points - &self.mean).dot(&self.components.t())
    }

    pub fn inverse_transform(&self, scores: &ArrayView2<f64>) -> Array2<f64> {
        scores.dot(&self.components) + &self.mean
    }
}

/// Eigendecomposition of the mean-centred covariance. Each component's
/// sign is fixed so that its largest-magnitude entry is positive.
pub fn pca(points: &ArrayView2<f64>) -> Result<Pca> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::arg(format!("principal components need at least 2 points, got {n}")));
    }
    crate::linalg::check_finite(&points.iter().copied().collect::<Vec<_>>(), "points")?;
    let mean = points.mean_axis(Axis(0)).expect("n >= 2");
    let centred = points - &mean;
    let cov = centred.t().dot(&centred) / (n - 1) as f64;
    let (w, v) = cov.eigh(UPLO::Lower)?;
    let d = w.len();
    let mut components = Array2::zeros((d, d));
    let mut explained_variance = Array1::zeros(d);
    for k in 0..d {
        let src = d - 1 - k;
        let col = v.column(src);
        let pivot = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.row_mut(k).assign(&(&col * sign));
        explained_variance[k] = w[src].max(0.0);
    }
    Ok(Pca {
        mean,
        components,
        explained_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::synthetic::gaussian;
    use ndarray::array;

    #[test]
    fn collinear_points_have_one_component() {
        let p = array![[0.0, 0.0, 1.0], [1.0, 2.0, 1.0], [2.0, 4.0, 1.0], [-3.0, -6.0, 1.0]];
        let r = pca(&p.view()).unwrap();
        let ratio = r.explained_ratio();
        assert!((ratio[0] - 1.0).abs() < 1e-12);
        let c = r.components.row(0);
        assert!((c[0] - 1.0 / 5f64.sqrt()).abs() < 1e-12 && (c[1] - 2.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn isotropic_sample_and_round_trip() {
        let p = gaussian(4000, 4, 9);
        let r = pca(&p.view()).unwrap();
        for v in r.explained_variance.iter() {
            assert!((v - 1.0).abs() < 0.1, "{v}");
        }
        let g = r.components.dot(&r.components.t());
        for i in 0..4 {
            for j in 0..4 {
                assert!((g[[i, j]] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let back = r.inverse_transform(&r.transform(&p.view()).view());
        assert!((&back - &p).iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn single_point_is_rejected() {
        assert!(pca(&array![[1.0, 2.0]].view()).is_err());
    }
}
