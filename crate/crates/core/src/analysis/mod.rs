//! Intrinsic dimension, principal components, t-SNE and rank correlation
//! for point clouds of observations or latent codes.

pub mod correlation;
pub mod neighbors;
pub mod pca;
pub mod synthetic;
pub mod tsne;
pub mod twonn;

pub use correlation::{latent_observable_correlation, latent_projection, spearman, Correlation, LatentDirection};
pub use neighbors::{k_nearest, neighbor_ratios};
pub use pca::{pca, Pca};
pub use tsne::{tsne, Embedding2D, TsneConfig};
pub use twonn::{
    default_windows, twonn_from_ratios, twonn_id, two_slope_analysis, two_slope_from_ratios, IdEstimate, MuWindow,
    WindowSlope,
};
