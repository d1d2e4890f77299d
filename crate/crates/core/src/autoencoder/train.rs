use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{backward, encode, forward_trace, loss, NetworkConfig, NetworkParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: NetworkParams,
    pub v: NetworkParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, net: &NetworkConfig) -> Self {
        AdamState {
            config,
            m: NetworkParams::zeros(net),
            v: NetworkParams::zeros(net),
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut NetworkParams, grad: &NetworkParams) {
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let step_size = lr / c1;
        let sqrt_c2 = c2.sqrt();
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= step_size * *m / (v.sqrt() / sqrt_c2 + eps);
        };
        for (((p, g), m), v) in params
            .layers
            .iter_mut()
            .zip(&grad.layers)
            .zip(&mut self.m.layers)
            .zip(&mut self.v.layers)
        {
            ndarray::Zip::from(&mut p.w)
                .and(&g.w)
                .and(&mut m.w)
                .and(&mut v.w)
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut p.b)
                .and(&g.b)
                .and(&mut m.b)
                .and(&mut v.b)
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub steps: usize,
    pub eval_every: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            steps: 50_000,
            eval_every: 500,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub step: usize,
    pub train_loss: f64,
    pub test_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub seed: u64,
    pub evaluations: Vec<Evaluation>,
    pub best_test_loss: f64,
    pub best_step: usize,
    /// Early-stopping snapshot: parameters at the best evaluation.
    pub best_params: NetworkParams,
}

/// Mini-batch Adam on `train`, evaluating both sets every `eval_every` steps
/// and at the last step, keeping the parameters with the lowest test loss.
pub fn train_arrays(
    train: &ArrayView2<f64>,
    test: &ArrayView2<f64>,
    network: &NetworkConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainReport> {
    network.validate()?;
    if cfg.steps == 0 || cfg.batch_size == 0 || cfg.eval_every == 0 {
        return Err(Error::arg("steps, batch size and evaluation interval must be positive"));
    }
    if train.nrows() == 0 || test.nrows() == 0 {
        return Err(Error::arg("train and test sets must be non-empty"));
    }
    let mut params = NetworkParams::init(network, seed)?;
    let mut adam = AdamState::new(cfg.adam, network);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
    let n = train.nrows();
    let batch = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    let mut evaluations = Vec::new();
    let mut best: Option<(f64, usize, NetworkParams)> = None;
    for step in 1..=cfg.steps {
        if cursor + batch > n {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let x = train.select(Axis(0), &order[cursor..cursor + batch]);
        cursor += batch;
        let trace = forward_trace(&params, network, &x.view());
        let (value, grad) = backward(&params, network, &x.view(), &trace);
        if !value.is_finite() {
            return Err(Error::Diverged { step, loss: value });
        }
        adam.update(&mut params, &grad);

        if step % cfg.eval_every == 0 || step == cfg.steps {
            let train_loss = loss(&params, network, train)?;
            let test_loss = loss(&params, network, test)?;
            if !train_loss.is_finite() || !test_loss.is_finite() {
                return Err(Error::Diverged { step, loss: train_loss });
            }
            evaluations.push(Evaluation {
                step,
                train_loss,
                test_loss,
            });
            if best.as_ref().is_none_or(|b| test_loss < b.0) {
                best = Some((test_loss, step, params.clone()));
            }
            log::debug!("step {step}: train {train_loss:.3e} test {test_loss:.3e}");
        }
    }
    let (best_test_loss, best_step, best_params) = best.expect("final step is always evaluated");
    Ok(TrainReport {
        network: network.clone(),
        train: cfg.clone(),
        seed,
        evaluations,
        best_test_loss,
        best_step,
        best_params,
    })
}

/// [`train_arrays`] on the split stored in the dataset.
pub fn train(ds: &Dataset, network: &NetworkConfig, cfg: &TrainConfig, seed: u64) -> Result<TrainReport> {
    if network.input_dim != ds.n_cols() {
        return Err(Error::arg(format!(
            "network expects {} inputs, dataset has {} columns",
            network.input_dim,
            ds.n_cols()
        )));
    }
    let tr = ds.train_rows()?;
    let te = ds.test_rows()?;
    train_arrays(&tr.view(), &te.view(), network, cfg, seed)
}

/// Test loss of the best constant predictor, the training mean. This is
/// what a zero-width bottleneck converges to.
pub fn mean_baseline(train: &ArrayView2<f64>, test: &ArrayView2<f64>) -> Result<f64> {
    let mean = train
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::arg("empty training set"))?;
    if test.nrows() == 0 {
        return Err(Error::arg("empty test set"));
    }
    Ok((test - &mean).mapv(|d| d * d).mean().unwrap())
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub latent_dim: usize,
    pub seed: u64,
    pub best_test_loss: f64,
    /// `None` for the analytic zero-latent baseline.
    pub report: Option<TrainReport>,
}

/// One independent training per latent width. `N_L = 0` is the analytic mean
/// baseline. Entries run concurrently on the current rayon pool.
pub fn latent_sweep(
    ds: &Dataset,
    latent_dims: &[usize],
    template: &NetworkConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if latent_dims.is_empty() {
        return Err(Error::arg("no latent widths given"));
    }
    let tr = ds.train_rows()?;
    let te = ds.test_rows()?;
    latent_dims
        .par_iter()
        .map(|&nl| {
            if nl == 0 {
                return Ok(SweepPoint {
                    latent_dim: 0,
                    seed,
                    best_test_loss: mean_baseline(&tr.view(), &te.view())?,
                    report: None,
                });
            }
            let net = NetworkConfig {
                latent_dim: nl,
                input_dim: ds.n_cols(),
                ..template.clone()
            };
            let report = train_arrays(&tr.view(), &te.view(), &net, cfg, seed)?;
            Ok(SweepPoint {
                latent_dim: nl,
                seed,
                best_test_loss: report.best_test_loss,
                report: Some(report),
            })
        })
        .collect()
}

/// Latent vectors of every row, in row order.
pub fn encode_dataset(params: &NetworkParams, network: &NetworkConfig, ds: &Dataset) -> Result<Array2<f64>> {
    encode(params, network, &ds.rows().view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{split, Dataset, Metadata};
    use crate::pauli::enumerate_support_strings;
    use rand::Rng;

    /// Points on a one-parameter curve embedded in 12 dimensions.
    fn curve_dataset(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Array2::zeros((n, 12));
        for mut r in rows.rows_mut() {
            let t: f64 = rng.random_range(-1.0..1.0);
            for (k, v) in r.iter_mut().enumerate() {
                *v = 0.8 * ((k as f64 + 1.0) * t * 0.25 + k as f64).sin();
            }
        }
        let labels = enumerate_support_strings(2).unwrap()[..12].to_vec();
        split(Dataset::new(labels, rows, Metadata::new("synthetic", 2, 2, seed)).unwrap(), 0.8, seed).unwrap()
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            batch_size: 32,
            steps: 600,
            eval_every: 100,
            adam: AdamConfig {
                lr: 3e-3,
                ..Default::default()
            },
        }
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let net = NetworkConfig::new(2, 3, 1);
        let mut p = NetworkParams::zeros(&net);
        let mut g = NetworkParams::zeros(&net);
        g.layers[0].w[[0, 0]] = 0.3;
        g.layers[0].w[[1, 0]] = -7.0;
        let mut adam = AdamState::new(AdamConfig::default(), &net);
        adam.update(&mut p, &g);
        assert!((p.layers[0].w[[0, 0]] + 5e-4).abs() < 1e-10);
        assert!((p.layers[0].w[[1, 0]] - 5e-4).abs() < 1e-10);
        assert_eq!(p.layers[0].w[[0, 1]], 0.0);
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let ds = curve_dataset(200, 1);
        let net = NetworkConfig::new(12, 16, 1);
        let a = train(&ds, &net, &quick(), 5).unwrap();
        let b = train(&ds, &net, &quick(), 5).unwrap();
        assert_eq!(a.evaluations, b.evaluations);
        assert_eq!(a.best_params, b.best_params);
        let base = mean_baseline(&ds.train_rows().unwrap().view(), &ds.test_rows().unwrap().view()).unwrap();
        assert!(a.best_test_loss < 0.2 * base, "{} vs {}", a.best_test_loss, base);
        let min = a.evaluations.iter().map(|e| e.test_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best_test_loss, min);
        assert_eq!(a.evaluations.last().unwrap().step, 600);
    }

    #[test]
    fn longer_training_never_reports_worse_best() {
        let ds = curve_dataset(120, 2);
        let net = NetworkConfig::new(12, 8, 1);
        let short = train(&ds, &net, &quick(), 3).unwrap();
        let long = train(&ds, &net, &TrainConfig { steps: 1200, ..quick() }, 3).unwrap();
        assert!(long.best_test_loss <= short.best_test_loss);
    }

    #[test]
    fn zero_latent_training_approaches_mean_baseline() {
        let ds = curve_dataset(150, 3);
        let net = NetworkConfig::new(12, 8, 0);
        let cfg = TrainConfig { steps: 3000, ..quick() };
        let rep = train(&ds, &net, &cfg, 1).unwrap();
        let base = mean_baseline(&ds.train_rows().unwrap().view(), &ds.test_rows().unwrap().view()).unwrap();
        // the learned constant sits near the training mean, not on it
        assert!((rep.best_test_loss / base - 1.0).abs() < 0.05, "{} vs {base}", rep.best_test_loss);
        let sweep = latent_sweep(&ds, &[0], &net, &cfg, 1).unwrap();
        assert_eq!(sweep[0].best_test_loss, base);
    }

    #[test]
    fn baseline_equals_test_deviation_from_train_mean() {
        let tr = ndarray::array![[1.0, 2.0], [3.0, 4.0]];
        let te = ndarray::array![[0.0, 0.0]];
        // train mean (2, 3): ((0-2)^2 + (0-3)^2) / 2 = 6.5
        assert!((mean_baseline(&tr.view(), &te.view()).unwrap() - 6.5).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        let ds = curve_dataset(60, 4);
        let net = NetworkConfig::new(12, 8, 1);
        let cfg = TrainConfig {
            adam: AdamConfig { lr: f64::INFINITY, ..Default::default() },
            ..quick()
        };
        assert!(matches!(train(&ds, &net, &cfg, 1), Err(Error::Diverged { .. })));
    }

    #[test]
    fn constant_dataset_has_constant_latents() {
        let labels = enumerate_support_strings(1).unwrap();
        let rows = Array2::from_elem((10, 3), 0.25);
        let ds = Dataset::new(labels, rows, Metadata::new("synthetic", 1, 1, 0)).unwrap();
        let net = NetworkConfig::new(3, 4, 2);
        let p = NetworkParams::init(&net, 2).unwrap();
        let z = encode_dataset(&p, &net, &ds).unwrap();
        for r in z.rows() {
            assert_eq!(r, z.row(0));
        }
    }
}
