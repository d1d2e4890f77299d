//! Exact O(n^2) t-SNE.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::neighbors::{contiguous_rows, sq_dist};
use crate::error::{Error, Result};

pub const MAX_TSNE_POINTS: usize = 5000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Embedding2D {
    /// `n x 2` coordinates.
    pub points: Array2<f64>,
    pub config: TsneConfig,
    /// KL divergence against the unexaggerated affinities, per iteration.
    pub kl_history: Vec<f64>,
}

impl Embedding2D {
    pub fn final_kl(&self) -> f64 {
        self.kl_history.last().copied().unwrap_or(f64::NAN)
    }
}

const ENTROPY_TOL: f64 = 1e-5;
const BISECTION_STEPS: usize = 100;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-12;

/// Conditional affinities of one row given squared distances, with the
/// Gaussian precision bisected until the entropy matches `ln(perplexity)`.
fn row_affinities(d2: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let dmin = d2
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
    let mut p = vec![0.0; d2.len()];
    for _ in 0..BISECTION_STEPS {
        let mut sum = 0.0;
        let mut sum_dp = 0.0;
        for (j, (&d, pj)) in d2.iter().zip(p.iter_mut()).enumerate() {
            // Shifted by the nearest distance so the nearest term is exp(0).
            *pj = if j == i { 0.0 } else { (-(d - dmin) * beta).exp() };
            sum += *pj;
            sum_dp += (d - dmin) * *pj;
        }
        let entropy = sum.ln() + beta * sum_dp / sum;
        p.iter_mut().for_each(|x| *x /= sum);
        let diff = entropy - target;
        if diff.abs() < ENTROPY_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
    }
    p
}

/// Symmetrised joint affinities `(p_j|i + p_i|j) / 2n`.
fn joint_affinities(rows: &[Vec<f64>], perplexity: f64) -> Array2<f64> {
    let n = rows.len();
    let cond: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d2: Vec<f64> = rows.iter().map(|r| sq_dist(&rows[i], r)).collect();
            row_affinities(&d2, i, perplexity)
        })
        .collect();
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[[i, j]] = ((cond[i][j] + cond[j][i]) / (2.0 * n as f64)).max(P_FLOOR);
            }
        }
    }
    p
}

/// Student-t kernel rows `1 / (1 + |y_i - y_j|^2)` with a zero diagonal.
fn kernel(y: &Array2<f64>) -> (Array2<f64>, f64) {
    let n = y.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (a0, a1) = (y[[i, 0]], y[[i, 1]]);
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let (d0, d1) = (a0 - y[[j, 0]], a1 - y[[j, 1]]);
                        1.0 / (1.0 + d0 * d0 + d1 * d1)
                    }
                })
                .collect()
        })
        .collect();
    let total: f64 = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    (Array2::from_shape_vec((n, n), flat).expect("square"), total)
}

fn kl_divergence(p: &Array2<f64>, num: &Array2<f64>, total: f64) -> f64 {
    let n = p.nrows();
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let q = (num[[i, j]] / total).max(P_FLOOR);
                kl += p[[i, j]] * (p[[i, j]] / q).ln();
            }
        }
    }
    kl
}

pub fn tsne(points: &ArrayView2<f64>, config: &TsneConfig) -> Result<Embedding2D> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::arg(format!("t-SNE needs at least 2 points, got {n}")));
    }
    if n > MAX_TSNE_POINTS {
        return Err(Error::Resource(format!(
            "exact t-SNE is limited to {MAX_TSNE_POINTS} points, got {n}"
        )));
    }
    if !(config.perplexity > 0.0 && config.perplexity < n as f64 / 3.0) {
        return Err(Error::arg(format!(
            "perplexity {} must be positive and below n/3 = {:.3}",
            config.perplexity,
            n as f64 / 3.0
        )));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::arg("learning rate must be positive"));
    }
    let rows = contiguous_rows(points);
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::arg("points must be finite"));
    }
    let p = joint_affinities(&rows, config.perplexity);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y = Array2::from_shape_fn((n, 2), |_| 1e-4 * rng.sample::<f64, _>(StandardNormal));
    let mut update = Array2::<f64>::zeros((n, 2));
    let mut gains = Array2::<f64>::ones((n, 2));
    let mut kl_history = Vec::with_capacity(config.iterations);

    for it in 0..config.iterations {
        let early = it < config.exaggeration_iterations;
        let exaggeration = if early { config.early_exaggeration } else { 1.0 };
        let momentum = if early { config.initial_momentum } else { config.final_momentum };
        let (num, total) = kernel(&y);
        kl_history.push(kl_divergence(&p, &num, total));

        let grad_rows: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let w = num[[i, j]];
                    let m = (exaggeration * p[[i, j]] - w / total) * w;
                    g[0] += m * (y[[i, 0]] - y[[j, 0]]);
                    g[1] += m * (y[[i, 1]] - y[[j, 1]]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        for (i, g) in grad_rows.iter().enumerate() {
            for c in 0..2 {
                let same_sign = (g[c] > 0.0) == (update[[i, c]] > 0.0);
                let gain = &mut gains[[i, c]];
                *gain = if same_sign { *gain * 0.8 } else { *gain + 0.2 }.max(MIN_GAIN);
                update[[i, c]] = momentum * update[[i, c]] - config.learning_rate * *gain * g[c];
                y[[i, c]] += update[[i, c]];
            }
        }
        let mean = y.mean_axis(ndarray::Axis(0)).expect("n >= 2");
        y -= &mean;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Internal(format!("t-SNE coordinates became non-finite at iteration {it}")));
        }
    }
    let (num, total) = kernel(&y);
    kl_history.push(kl_divergence(&p, &num, total));
    Ok(Embedding2D {
        points: y,
        config: config.clone(),
        kl_history,
    })
}
