//! Brute-force Euclidean neighbour search.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Squared Euclidean distance between two rows.
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn contiguous_rows(points: &ArrayView2<f64>) -> Vec<Vec<f64>> {
    points.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// The `k` nearest neighbours of every row as `(index, distance)` pairs,
/// nearest first. Ties are broken by index so the result is deterministic.
pub fn k_nearest(points: &ArrayView2<f64>, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = points.nrows();
    if k == 0 || k >= n {
        return Err(Error::arg(format!("need more than k = {k} points, got {n}")));
    }
    let rows = contiguous_rows(points);
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::arg("points must be finite"));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, sq_dist(&rows[i], &rows[j])))
                .collect();
            let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
            d.select_nth_unstable_by(k - 1, cmp);
            d.truncate(k);
            d.sort_by(cmp);
            d.into_iter().map(|(j, s)| (j, s.sqrt())).collect()
        })
        .collect())
}

/// Ratios `r2 / r1` of second to first neighbour distance.
///
/// Rows whose nearest neighbour sits at distance zero make the ratio
/// undefined; all of them are reported together.
pub fn neighbor_ratios(points: &ArrayView2<f64>) -> Result<Vec<f64>> {
    let nn = k_nearest(points, 2)?;
    let dup: Vec<usize> = nn
        .iter()
        .enumerate()
        .filter(|(_, v)| v[0].1 == 0.0)
        .map(|(i, _)| i)
        .collect();
    if !dup.is_empty() {
        return Err(Error::DegenerateData { indices: dup });
    }
    Ok(nn.iter().map(|v| v[1].1 / v[0].1).collect())
}
