use serde::{Deserialize, Serialize};

use super::layer::LayerSpec;
use super::model::Model;
use crate::error::{Error, Result};

pub const DEFAULT_MLP_HIDDEN: [usize; 2] = [128, 128];
/// Lands near 87K parameters for 200-band, 11x11 patches with 64-d output.
pub const DEFAULT_CONV_CHANNELS: [usize; 3] = [18, 48, 48];

/// Embedding network family. Both take `[bands, patch, patch]` inputs and
/// put a batchnorm in front of every weight layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "snake_case")]
pub enum Architecture {
    /// Flattened patch through fully connected hidden layers.
    Mlp { hidden: Vec<usize> },
    /// Three 3x3 convolutions (stride 1, 2, 2) then a fully connected layer.
    Conv { channels: [usize; 3] },
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture::mlp()
    }
}

impl Architecture {
    pub fn mlp() -> Self {
        Architecture::Mlp {
            hidden: DEFAULT_MLP_HIDDEN.to_vec(),
        }
    }

    pub fn conv() -> Self {
        Architecture::Conv {
            channels: DEFAULT_CONV_CHANNELS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Mlp { .. } => "mlp",
            Architecture::Conv { .. } => "conv",
        }
    }

    pub fn layers(&self, bands: usize, patch: usize, embed_dim: usize) -> Result<Vec<LayerSpec>> {
        if bands == 0 || patch == 0 || embed_dim == 0 {
            return Err(Error::Config("bands, patch size and embed dim must be positive".into()));
        }
        let mut layers = vec![LayerSpec::batchnorm(bands)];
        match self {
            Architecture::Mlp { hidden } => {
                let mut width = bands * patch * patch;
                for &h in hidden {
                    layers.push(LayerSpec::linear(width, h));
                    layers.push(LayerSpec::batchnorm(h));
                    layers.push(LayerSpec::relu());
                    width = h;
                }
                layers.push(LayerSpec::linear(width, embed_dim));
            }
            Architecture::Conv { channels } => {
                let mut c_in = bands;
                let mut side = patch;
                for (i, &c) in channels.iter().enumerate() {
                    let stride = if i == 0 { 1 } else { 2 };
                    layers.push(LayerSpec::conv2d(c_in, c, 3, stride, 1));
                    layers.push(LayerSpec::batchnorm(c));
                    layers.push(LayerSpec::relu());
                    side = (side + 2 - 3) / stride + 1;
                    c_in = c;
                }
                layers.push(LayerSpec::linear(c_in * side * side, embed_dim));
            }
        }
        Ok(layers)
    }
}

pub fn build_model(
    arch: &Architecture,
    bands: usize,
    patch: usize,
    embed_dim: usize,
    seed: u64,
) -> Result<Model> {
    let layers = arch.layers(bands, patch, embed_dim)?;
    Model::new(vec![bands, patch, patch], layers, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_conv_param_budget() {
        let m = build_model(&Architecture::conv(), 200, 11, 64, 0).unwrap();
        assert_eq!(m.param_count(), 89_366);
        assert!(m.param_count() <= 100_000);
        assert_eq!(m.output_dim(), 64);
    }

    #[test]
    fn mlp_shapes() {
        let m = build_model(&Architecture::mlp(), 8, 11, 64, 0).unwrap();
        assert_eq!(m.input_shape(), &[8, 11, 11]);
        assert_eq!(m.output_dim(), 64);
    }
}
