use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    #[default]
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub encoder_widths: Vec<usize>,
    pub latent_dim: usize,
    pub decoder_widths: Vec<usize>,
    #[serde(default)]
    pub output_activation: Activation,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, width: usize, latent_dim: usize) -> Self {
        NetworkConfig {
            input_dim,
            encoder_widths: vec![width, width],
            latent_dim,
            decoder_widths: vec![width, width],
            output_activation: Activation::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::arg("input dimension must be positive"));
        }
        if self.encoder_widths.iter().chain(&self.decoder_widths).any(|&w| w == 0) {
            return Err(Error::arg("hidden widths must be positive"));
        }
        if self.latent_dim > self.input_dim {
            return Err(Error::arg(format!(
                "latent dimension {} exceeds input dimension {}",
                self.latent_dim, self.input_dim
            )));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim];
        d.extend(&self.encoder_widths);
        d.push(self.latent_dim);
        d.extend(&self.decoder_widths);
        d.push(self.input_dim);
        d
    }

    /// Index of the layer whose output is the latent code.
    pub fn latent_layer(&self) -> usize {
        self.encoder_widths.len()
    }

    pub fn n_layers(&self) -> usize {
        self.encoder_widths.len() + self.decoder_widths.len() + 2
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.n_layers() {
            self.output_activation
        } else {
            Activation::Tanh
        }
    }
}

/// One affine layer `z = a W + b`, with `W` stored input-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<Layer>,
}

impl NetworkParams {
    /// Weights and biases uniform on `±1/sqrt(fan_in)`.
    pub fn init(config: &NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = config.dims();
        let layers = dims
            .windows(2)
            .map(|io| {
                let scale = 1.0 / (io[0].max(1) as f64).sqrt();
                let mut draw = || rng.random_range(-scale..scale);
                Layer {
                    w: Array2::from_shape_fn((io[0], io[1]), |_| draw()),
                    b: Array1::from_shape_fn(io[1], |_| draw()),
                }
            })
            .collect();
        Ok(NetworkParams { layers })
    }

    pub fn zeros(config: &NetworkConfig) -> Self {
        let dims = config.dims();
        NetworkParams {
            layers: dims
                .windows(2)
                .map(|io| Layer {
                    w: Array2::zeros((io[0], io[1])),
                    b: Array1::zeros(io[1]),
                })
                .collect(),
        }
    }

    pub fn check_shapes(&self, config: &NetworkConfig) -> Result<()> {
        let dims = config.dims();
        if self.layers.len() + 1 != dims.len() {
            return Err(Error::arg("layer count does not match the configuration"));
        }
        for (l, (layer, io)) in self.layers.iter().zip(dims.windows(2)).enumerate() {
            if layer.w.dim() != (io[0], io[1]) || layer.b.len() != io[1] {
                return Err(Error::arg(format!("layer {l} has the wrong shape")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All weights then biases, layer by layer, weights row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn from_flat(config: &NetworkConfig, flat: &[f64]) -> Result<Self> {
        let mut p = NetworkParams::zeros(config);
        if flat.len() != p.len() {
            return Err(Error::arg(format!("expected {} parameters, got {}", p.len(), flat.len())));
        }
        let mut it = flat.iter().copied();
        for l in &mut p.layers {
            l.w.iter_mut().for_each(|x| *x = it.next().unwrap());
            l.b.iter_mut().for_each(|x| *x = it.next().unwrap());
        }
        Ok(p)
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|x| x.is_finite()))
    }
}

/// Activations of every layer for one batch, kept for backpropagation.
pub struct Trace {
    /// `acts[0]` is the input; `acts[l + 1]` is the output of layer `l`.
    pub acts: Vec<Array2<f64>>,
}

fn apply_layer(a: &ArrayView2<f64>, layer: &Layer, act: Activation) -> Array2<f64> {
    let mut z = a.dot(&layer.w);
    z += &layer.b;
    if act == Activation::Tanh {
        z.mapv_inplace(f64::tanh);
    }
    z
}

pub fn forward_trace(params: &NetworkParams, config: &NetworkConfig, x: &ArrayView2<f64>) -> Trace {
    let mut acts = Vec::with_capacity(params.layers.len() + 1);
    acts.push(x.to_owned());
    for (l, layer) in params.layers.iter().enumerate() {
        let next = apply_layer(&acts[l].view(), layer, config.activation(l));
        acts.push(next);
    }
    Trace { acts }
}

fn check_input(config: &NetworkConfig, x: &ArrayView2<f64>) -> Result<()> {
    if x.ncols() != config.input_dim {
        return Err(Error::arg(format!(
            "input has {} columns, network expects {}",
            x.ncols(),
            config.input_dim
        )));
    }
    Ok(())
}

/// Reconstruction and latent code for a batch of rows.
pub fn forward(params: &NetworkParams, config: &NetworkConfig, x: &ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    check_input(config, x)?;
    let mut t = forward_trace(params, config, x);
    let out = t.acts.pop().unwrap();
    let latent = t.acts.swap_remove(config.latent_layer() + 1);
    Ok((out, latent))
}

/// Latent code only.
pub fn encode(params: &NetworkParams, config: &NetworkConfig, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
    check_input(config, x)?;
    let mut a = x.to_owned();
    for l in 0..=config.latent_layer() {
        a = apply_layer(&a.view(), &params.layers[l], config.activation(l));
    }
    Ok(a)
}

/// Mean over rows and components of the squared reconstruction error.
pub fn loss(params: &NetworkParams, config: &NetworkConfig, x: &ArrayView2<f64>) -> Result<f64> {
    check_input(config, x)?;
    if x.nrows() == 0 {
        return Err(Error::arg("empty batch"));
    }
    // chunked to bound memory on large evaluation sets
    let mut total = 0.0;
    for chunk in x.axis_chunks_iter(Axis(0), 1024) {
        let t = forward_trace(params, config, &chunk);
        let out = t.acts.last().unwrap();
        total += (out - &chunk).mapv(|d| d * d).sum();
    }
    Ok(total / x.len() as f64)
}

/// Loss and its exact gradient by reverse accumulation.
pub fn gradient(params: &NetworkParams, config: &NetworkConfig, x: &ArrayView2<f64>) -> Result<(f64, NetworkParams)> {
    check_input(config, x)?;
    if x.nrows() == 0 {
        return Err(Error::arg("empty batch"));
    }
    let t = forward_trace(params, config, x);
    Ok(backward(params, config, x, &t))
}

pub(crate) fn backward(params: &NetworkParams, config: &NetworkConfig, x: &ArrayView2<f64>, t: &Trace) -> (f64, NetworkParams) {
    let n = x.len() as f64;
    let out = t.acts.last().unwrap();
    let diff = out - x;
    let value = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let mut delta = diff * (2.0 / n);
    let mut grads: Vec<Layer> = Vec::with_capacity(params.layers.len());
    for l in (0..params.layers.len()).rev() {
        if config.activation(l) == Activation::Tanh {
            delta.zip_mut_with(&t.acts[l + 1], |d, &a| *d *= 1.0 - a * a);
        }
        let a_prev = &t.acts[l];
        let gw = a_prev.t().dot(&delta);
        let gb = delta.sum_axis(Axis(0));
        if l > 0 {
            delta = delta.dot(&params.layers[l].w.t());
        }
        grads.push(Layer { w: gw, b: gb });
    }
    grads.reverse();
    (value, NetworkParams { layers: grads })
}
