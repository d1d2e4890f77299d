//! TOML checkpoints: a version tag, the network and training
//! configuration, and every parameter in one flat array (per layer, the
//! row-major `input x output` weights followed by the biases).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{NetworkConfig, NetworkParams};
use super::train::{TrainConfig, TrainReport};
use crate::dataset::write_atomic;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub seed: String,
    pub best_step: usize,
    pub best_test_loss: f64,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn from_report(report: &TrainReport) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            seed: report.seed.to_string(),
            best_step: report.best_step,
            best_test_loss: report.best_test_loss,
            network: report.network.clone(),
            train: report.train.clone(),
            params: report.best_params.to_flat(),
        }
    }

    pub fn params(&self) -> Result<NetworkParams> {
        NetworkParams::from_flat(&self.network, &self.params)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("checkpoint serialization: {e}")))
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let ck: Checkpoint = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0),
            column: None,
            message: e.message().to_string(),
        })?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                column: None,
                message: format!("unsupported checkpoint version {}", ck.version),
            });
        }
        ck.network.validate()?;
        ck.params()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_toml()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_toml(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::network::Activation;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut net = NetworkConfig::new(5, 7, 2);
        net.output_activation = Activation::Tanh;
        let p = NetworkParams::init(&net, 11).unwrap();
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            seed: u64::MAX.to_string(),
            best_step: 400,
            best_test_loss: 1.0 / 3.0,
            network: net,
            train: TrainConfig::default(),
            params: p.to_flat(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.toml");
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.params().unwrap(), p);
        let bad = ck.to_toml().unwrap().replace("version = 1", "version = 9");
        assert!(Checkpoint::from_toml(&bad, &path).is_err());
    }
}
