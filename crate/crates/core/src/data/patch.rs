use super::HsiDataset;
use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Per-pixel feature vectors on the image grid, row-major `H x W x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCube {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub data: Vec<f64>,
}

impl FeatureCube {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * bands {
            return Err(Error::Config("feature cube size mismatch".into()));
        }
        Ok(Self {
            height,
            width,
            bands,
            data,
        })
    }

    pub fn from_dataset(ds: &HsiDataset) -> Self {
        Self {
            height: ds.height(),
            width: ds.width(),
            bands: ds.bands(),
            data: ds.cube().iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.data[p * self.bands..(p + 1) * self.bands]
    }

    /// Writes the `size x size` window around `p` channel-first
    /// (`[band][row][col]`) into `out`, zero outside the image.
    pub fn write_patch_chw(&self, p: usize, size: usize, out: &mut [f64]) {
        let half = (size / 2) as isize;
        let (cy, cx) = ((p / self.width) as isize, (p % self.width) as isize);
        let plane = size * size;
        out[..plane * self.bands].fill(0.0);
        for dy in 0..size {
            let y = cy + dy as isize - half;
            if y < 0 || y >= self.height as isize {
                continue;
            }
            for dx in 0..size {
                let x = cx + dx as isize - half;
                if x < 0 || x >= self.width as isize {
                    continue;
                }
                let src = self.pixel(y as usize * self.width + x as usize);
                for (b, &v) in src.iter().enumerate() {
                    out[b * plane + dy * size + dx] = v;
                }
            }
        }
    }
}

/// `size x size x K` window centered on pixel `p`, zero-padded.
pub fn extract_patch(cube: &FeatureCube, p: usize, size: usize) -> Result<Tensor> {
    if size.is_multiple_of(2) {
        return Err(Error::Config(format!("patch size must be odd, got {size}")));
    }
    if p >= cube.height * cube.width {
        return Err(Error::Config(format!("pixel {p} outside the image")));
    }
    let mut chw = vec![0.0; size * size * cube.bands];
    cube.write_patch_chw(p, size, &mut chw);
    let plane = size * size;
    let mut hwc = vec![0.0; chw.len()];
    for b in 0..cube.bands {
        for i in 0..plane {
            hwc[i * cube.bands + b] = chw[b * plane + i];
        }
    }
    Tensor::new(vec![size, size, cube.bands], hwc)
}
