//! Rank correlation between latent coordinates and physical observables.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::pca::pca;
use crate::error::{Error, Result};

/// Fraction of tied rows above which a correlation is flagged.
pub const TIE_WARNING_FRACTION: f64 = 0.5;

/// Ranks starting at 1, tied values sharing the average of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let r = 0.5 * (start + end + 1) as f64;
        for &k in &order[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

fn tied_rows(values: &[f64]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut tied = vec![false; values.len()];
    for w in order.windows(2) {
        if values[w[0]] == values[w[1]] {
            tied[w[0]] = true;
            tied[w[1]] = true;
        }
    }
    tied
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub spearman: f64,
    /// The observable is strictly monotonic in the latent coordinate.
    pub monotone: bool,
    /// Fraction of rows whose coordinate or observable value is shared
    /// with another row.
    pub tie_fraction: f64,
    pub degenerate_ties: bool,
}

/// Spearman correlation with average ranks for ties. A constant input has
/// no defined correlation and reports 0 with the tie warning set.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::arg(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::arg("rank correlation needs at least 2 rows"));
    }
    crate::linalg::check_finite(x, "coordinates")?;
    crate::linalg::check_finite(y, "observable values")?;
    let rho = pearson(&average_ranks(x), &average_ranks(y));
    let (tx, ty) = (tied_rows(x), tied_rows(y));
    let tie_fraction = tx.iter().zip(&ty).filter(|(a, b)| **a || **b).count() as f64 / x.len() as f64;
    let degenerate_ties = tie_fraction > TIE_WARNING_FRACTION;
    if degenerate_ties {
        log::warn!("{:.0}% of rows are tied; rank correlation is unreliable", 100.0 * tie_fraction);
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let steps: Vec<f64> = order.windows(2).map(|w| y[w[1]] - y[w[0]]).collect();
    let monotone = !tx.iter().any(|&t| t) && (steps.iter().all(|&d| d > 0.0) || steps.iter().all(|&d| d < 0.0));
    Ok(Correlation {
        spearman: rho,
        monotone,
        tie_fraction,
        degenerate_ties,
    })
}

/// Which one-dimensional projection of the latent set to correlate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatentDirection {
    /// A raw latent coordinate.
    Coordinate(usize),
    /// Scores along a principal component of the latent set (0 = largest).
    Principal(usize),
}

pub fn latent_projection(latents: &ArrayView2<f64>, direction: LatentDirection) -> Result<Vec<f64>> {
    let dim = latents.ncols();
    match direction {
        LatentDirection::Coordinate(k) | LatentDirection::Principal(k) if k >= dim => Err(Error::arg(format!(
            "direction {k} out of range for {dim} latent dimensions"
        ))),
        LatentDirection::Coordinate(k) => Ok(latents.column(k).to_vec()),
        LatentDirection::Principal(k) => {
            let p = pca(latents)?;
            Ok(p.transform(latents).column(k).to_vec())
        }
    }
}

pub fn latent_observable_correlation(
    latents: &ArrayView2<f64>,
    values: &[f64],
    direction: LatentDirection,
) -> Result<Correlation> {
    if latents.nrows() != values.len() {
        return Err(Error::arg(format!(
            "{} latent rows but {} observable values",
            latents.nrows(),
            values.len()
        )));
    }
    spearman(&latent_projection(latents, direction)?, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn identical_and_reversed() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin() + i as f64).collect();
        let c = spearman(&x, &x).unwrap();
        assert_eq!(c.spearman, 1.0);
        assert!(c.monotone && !c.degenerate_ties);
        let y: Vec<f64> = x.iter().map(|v| (-v).exp()).collect();
        let c = spearman(&x, &y).unwrap();
        assert!((c.spearman + 1.0).abs() < 1e-15 && c.monotone);
    }

    #[test]
    fn textbook_value() {
        // Hand-ranked: d = [0, -1, 1, 0, 0], rho = 1 - 6 * 2 / (5 * 24) = 0.9.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [10.0, 30.0, 20.0, 40.0, 50.0];
        let c = spearman(&x, &y).unwrap();
        assert!((c.spearman - 0.9).abs() < 1e-14);
        assert!(!c.monotone);
    }

    #[test]
    fn heavy_ties_are_flagged() {
        let x = [1.0, 1.0, 1.0, 2.0, 3.0];
        let c = spearman(&x, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(c.degenerate_ties && !c.monotone);
        let c = spearman(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(c.spearman, 0.0);
    }

    #[test]
    fn principal_direction_picks_the_spread_axis() {
        let lat = Array2::from_shape_fn((40, 2), |(i, j)| if j == 0 { i as f64 } else { 0.01 * (i % 3) as f64 });
        let v: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let c = latent_observable_correlation(&lat.view(), &v, LatentDirection::Principal(0)).unwrap();
        assert!((c.spearman.abs() - 1.0).abs() < 1e-12);
        assert!(latent_observable_correlation(&lat.view(), &v, LatentDirection::Coordinate(2)).is_err());
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_maps(xs in prop::collection::vec(-100.0f64..100.0, 3..40)) {
            let ys: Vec<f64> = xs.iter().map(|x| x * x * x + 2.0 * x).collect();
            let c = spearman(&xs, &ys).unwrap();
            let ties = c.tie_fraction > 0.0;
            prop_assert!(ties || (c.spearman - 1.0).abs() < 1e-12);
            prop_assert!(c.spearman.abs() <= 1.0 + 1e-12);
        }
    }
}
