use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CUBE_HEADER: &str = "cube.json";
pub const CUBE_DATA: &str = "cube.f32";
pub const LABELS_DATA: &str = "labels.u16";

/// `cube.json`: describes the raw `cube.f32` and `labels.u16` siblings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeHeader {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub dtype: String,
    pub order: String,
    /// Class count; defaults to the largest label when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
}

/// A `height x width x bands` cube with one ground-truth label per pixel.
/// Label 0 means "no ground truth"; classes are `1..=classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiDataset {
    height: usize,
    width: usize,
    bands: usize,
    classes: usize,
    cube: Vec<f32>,
    labels: Vec<u16>,
}

impl HsiDataset {
    pub fn new(
        height: usize,
        width: usize,
        bands: usize,
        classes: usize,
        cube: Vec<f32>,
        labels: Vec<u16>,
    ) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::Config("dataset dimensions must be positive".into()));
        }
        let pixels = height * width;
        if cube.len() != pixels * bands || labels.len() != pixels {
            return Err(Error::Config(format!(
                "{height}x{width}x{bands} cube needs {} values and {pixels} labels, got {} and {}",
                pixels * bands,
                cube.len(),
                labels.len()
            )));
        }
        if !cube.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("cube".into()));
        }
        if let Some((pixel, &label)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize > classes)
        {
            return Err(Error::LabelOutOfRange {
                label,
                pixel,
                classes,
            });
        }
        if labels.iter().all(|&l| l == 0) {
            return Err(Error::NoLabeledPixels);
        }
        Ok(Self {
            height,
            width,
            bands,
            classes,
            cube,
            labels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn n_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn cube(&self) -> &[f32] {
        &self.cube
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    /// Spectrum of pixel `p` (row-major index).
    pub fn spectrum(&self, p: usize) -> &[f32] {
        &self.cube[p * self.bands..(p + 1) * self.bands]
    }

    /// Row-major indices of pixels with a nonzero label.
    pub fn labeled_pixels(&self) -> Vec<usize> {
        (0..self.n_pixels()).filter(|&p| self.labels[p] != 0).collect()
    }

    /// Pixel count per class, index `c - 1` for label `c`.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.classes];
        for &l in &self.labels {
            if l != 0 {
                sizes[l as usize - 1] += 1;
            }
        }
        sizes
    }

    pub fn header(&self) -> CubeHeader {
        CubeHeader {
            height: self.height,
            width: self.width,
            bands: self.bands,
            dtype: "f32le".into(),
            order: "row-major HWB".into(),
            classes: Some(self.classes),
        }
    }
}

pub fn save_dataset(dataset: &HsiDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = serde_json::to_vec_pretty(&dataset.header())?;
    write(&dir.join(CUBE_HEADER), &header)?;
    let cube: Vec<u8> = dataset.cube.iter().flat_map(|v| v.to_le_bytes()).collect();
    write(&dir.join(CUBE_DATA), &cube)?;
    let labels: Vec<u8> = dataset.labels.iter().flat_map(|v| v.to_le_bytes()).collect();
    write(&dir.join(LABELS_DATA), &labels)
}

pub fn load_dataset(dir: &Path) -> Result<HsiDataset> {
    let header_path = dir.join(CUBE_HEADER);
    let header: CubeHeader = serde_json::from_slice(&read(&header_path)?)?;
    if header.dtype != "f32le" || header.order != "row-major HWB" {
        return Err(Error::Config(format!(
            "{}: unsupported dtype/order {:?}/{:?}",
            header_path.display(),
            header.dtype,
            header.order
        )));
    }
    let pixels = header.height * header.width;
    let cube_path = dir.join(CUBE_DATA);
    let raw = read(&cube_path)?;
    expect_len(&cube_path, raw.len(), pixels * header.bands * 4)?;
    let cube: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let labels_path = dir.join(LABELS_DATA);
    let raw = read(&labels_path)?;
    expect_len(&labels_path, raw.len(), pixels * 2)?;
    let labels: Vec<u16> = raw
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    let classes = header
        .classes
        .unwrap_or_else(|| labels.iter().copied().max().unwrap_or(0) as usize);
    HsiDataset::new(header.height, header.width, header.bands, classes, cube, labels)
}

fn expect_len(path: &Path, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::SizeMismatch {
            file: path.to_path_buf(),
            expected: expected as u64,
            got: got as u64,
        });
    }
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> HsiDataset {
        let cube = (0..12).map(|i| i as f32 * 0.25 - 1.0).collect();
        HsiDataset::new(2, 2, 3, 2, cube, vec![1, 0, 2, 1]).unwrap()
    }

    #[test]
    fn save_load_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ds = fixture();
        save_dataset(&ds, dir.path()).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), ds);
    }

    #[test]
    fn truncated_cube_reports_sizes() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&fixture(), dir.path()).unwrap();
        let p = dir.path().join(CUBE_DATA);
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        match load_dataset(dir.path()) {
            Err(Error::SizeMismatch { expected, got, .. }) => {
                assert_eq!((expected, got), (48, 45));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            HsiDataset::new(1, 2, 1, 1, vec![0.0; 2], vec![0, 0]),
            Err(Error::NoLabeledPixels)
        ));
        assert!(matches!(
            HsiDataset::new(1, 2, 1, 1, vec![0.0; 2], vec![1, 2]),
            Err(Error::LabelOutOfRange { label: 2, pixel: 1, .. })
        ));
        assert!(matches!(
            HsiDataset::new(1, 2, 1, 1, vec![0.0, f32::NAN], vec![1, 1]),
            Err(Error::NonFinite(_))
        ));
    }
}
