//! Bottleneck autoencoder with tanh hidden layers, hand-written
//! backpropagation and Adam.

pub mod checkpoint;
pub mod network;
pub mod train;

pub use checkpoint::Checkpoint;
pub use network::{encode, forward, gradient, loss, Activation, NetworkConfig, NetworkParams};
pub use train::{
    encode_dataset, latent_sweep, mean_baseline, train, train_arrays, AdamConfig, AdamState, Evaluation, SweepPoint,
    TrainConfig, TrainReport,
};
