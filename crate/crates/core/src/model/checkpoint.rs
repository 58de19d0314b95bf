use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::{ModelConfig, TaeModel};
use crate::autodiff::Tensor;
use crate::corpus::Vocab;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "tae-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Everything needed to rebuild a trained model and embed new documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_fingerprint: String,
    /// Resolved run configuration the model was trained with.
    pub config: serde_json::Value,
    pub model: ModelConfig,
    /// Epoch the parameters come from; `None` for the initialization.
    pub epoch: Option<usize>,
    pub vocab: Vocab,
    pub params: Vec<NamedTensor>,
}

/// Hex SHA-256 of the compact JSON form of `config`.
pub fn fingerprint(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON values always serialize");
    hex::encode(Sha256::digest(bytes))
}

impl Checkpoint {
    pub fn new(
        model: &TaeModel,
        vocab: &Vocab,
        config: serde_json::Value,
        epoch: Option<usize>,
    ) -> Self {
        let params = model
            .store
            .iter()
            .map(|(_, name, t)| NamedTensor {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                data: t.data().to_vec(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config_fingerprint: fingerprint(&config),
            config,
            model: model.config.clone(),
            epoch,
            vocab: vocab.clone(),
            params,
        }
    }

    /// Rebuilds the model, checking every tensor against the shapes the
    /// model configuration implies.
    pub fn to_model(&self) -> Result<TaeModel> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format {} v{}",
                self.format, self.version
            )));
        }
        if fingerprint(&self.config) != self.config_fingerprint {
            return Err(Error::Checkpoint("config fingerprint mismatch".into()));
        }
        let mut model = TaeModel::zeros(self.model.clone());
        if model.store.len() != self.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                model.store.len(),
                self.params.len()
            )));
        }
        let ids: Vec<_> = model.store.ids().collect();
        for (id, saved) in ids.into_iter().zip(&self.params) {
            let expected_name = model.store.name(id).to_string();
            if saved.name != expected_name {
                return Err(Error::Checkpoint(format!(
                    "expected tensor {expected_name}, found {}",
                    saved.name
                )));
            }
            if saved.shape != model.store.get(id).shape() {
                return Err(Error::ShapeMismatch {
                    op: "checkpoint",
                    left: model.store.get(id).shape().to_vec(),
                    right: saved.shape.clone(),
                });
            }
            *model.store.get_mut(id) = Tensor::new(saved.shape.clone(), saved.data.clone())?;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
