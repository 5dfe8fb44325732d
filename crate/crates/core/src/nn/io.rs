//! `TWNET1` model files.
//!
//! Layout: the magic `TWNET1`, a newline, one line of JSON ([`ModelHeader`]),
//! a newline, then `param_count` little-endian `f32` parameters followed by
//! `running_count` little-endian `f32` batchnorm running statistics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::LayerSpec;
use super::model::Model;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 6] = b"TWNET1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format_version: u32,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub embed_dim: usize,
    pub seed: u64,
    pub param_count: usize,
    pub running_count: usize,
    pub param_dtype: String,
    /// Free-form echo of the run configuration that produced the model.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl Model {
    pub fn header(&self, config: serde_json::Value) -> ModelHeader {
        ModelHeader {
            format_version: FORMAT_VERSION,
            input_shape: self.input_shape().to_vec(),
            layers: self.layers().to_vec(),
            embed_dim: self.output_dim(),
            seed: self.seed(),
            param_count: self.param_count(),
            running_count: self.running_stats().len(),
            param_dtype: "f32le".into(),
            config,
        }
    }

    /// Serializes the model. Values are stored as `f32`; see
    /// [`Model::round_to_f32`].
    pub fn to_bytes(&self, config: serde_json::Value) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header(config))?;
        let n = self.param_count() + self.running_stats().len();
        let mut out = Vec::with_capacity(MODEL_MAGIC.len() + header.len() + 2 + 4 * n);
        out.extend_from_slice(MODEL_MAGIC);
        out.push(b'\n');
        out.extend_from_slice(&header);
        out.push(b'\n');
        for v in self.params().iter().chain(self.running_stats()) {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Model, ModelHeader)> {
        let rest = bytes
            .strip_prefix(MODEL_MAGIC.as_slice())
            .and_then(|r| r.strip_prefix(b"\n"))
            .ok_or_else(|| Error::ModelFormat("missing TWNET1 magic".into()))?;
        let eol = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::ModelFormat("unterminated header".into()))?;
        let header: ModelHeader = serde_json::from_slice(&rest[..eol])?;
        if header.format_version != FORMAT_VERSION || header.param_dtype != "f32le" {
            return Err(Error::ModelFormat(format!(
                "unsupported version {} / dtype {}",
                header.format_version, header.param_dtype
            )));
        }
        let blob = &rest[eol + 1..];
        let expected = 4 * (header.param_count + header.running_count);
        if blob.len() != expected {
            return Err(Error::ModelFormat(format!(
                "expected {expected} payload bytes, got {}",
                blob.len()
            )));
        }
        let values: Vec<f64> = blob
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let (params, running) = values.split_at(header.param_count);
        let model = Model::from_parts(
            header.input_shape.clone(),
            header.layers.clone(),
            header.seed,
            params.to_vec(),
            running.to_vec(),
        )?;
        if model.output_dim() != header.embed_dim {
            return Err(Error::ModelFormat("embed_dim disagrees with layers".into()));
        }
        Ok((model, header))
    }

    pub fn save(&self, path: &Path, config: serde_json::Value) -> Result<()> {
        std::fs::write(path, self.to_bytes(config)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Model, ModelHeader)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
