use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::HsiDataset;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Role {
    Excluded = 0,
    Train = 1,
    Test = 2,
}

/// How many pixels of each class go to training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitMode {
    /// `ceil(fraction * class_size)`, at least 1.
    Fraction { fraction: f64 },
    /// `large` pixels from classes bigger than `large`, otherwise `small`
    /// (capped at the class size).
    PerClass { large: usize, small: usize },
}

/// Per-pixel train/test assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMask {
    roles: Vec<Role>,
    /// Train pixels per class, index `c - 1` for label `c`.
    train_counts: Vec<usize>,
}

/// Stratified random split of the labelled pixels.
pub fn split(ds: &HsiDataset, mode: SplitMode, seed: u64) -> Result<SplitMask> {
    if let SplitMode::Fraction { fraction } = mode {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Config(format!("train fraction {fraction} not in (0, 1]")));
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ds.classes()];
    for p in ds.labeled_pixels() {
        members[ds.labels()[p] as usize - 1].push(p);
    }
    let mut roles = vec![Role::Excluded; ds.n_pixels()];
    let mut train_counts = vec![0; ds.classes()];
    for (c, pixels) in members.iter_mut().enumerate() {
        let n = pixels.len();
        if n == 0 {
            continue;
        }
        if n < 2 {
            return Err(Error::Config(format!(
                "class {} has {n} labelled pixel; need at least 2",
                c + 1
            )));
        }
        let k = match mode {
            SplitMode::Fraction { fraction } => ((fraction * n as f64 - 1e-9).ceil() as usize).max(1),
            SplitMode::PerClass { large, small } => {
                if n > large {
                    large
                } else {
                    small.min(n)
                }
            }
        };
        let mut rng = rng::stream(seed, Stream::Split, c as u64);
        pixels.shuffle(&mut rng);
        for (i, &p) in pixels.iter().enumerate() {
            roles[p] = if i < k { Role::Train } else { Role::Test };
        }
        train_counts[c] = k;
    }
    Ok(SplitMask {
        roles,
        train_counts,
    })
}

impl SplitMask {
    pub fn from_roles(ds: &HsiDataset, roles: Vec<Role>) -> Result<Self> {
        if roles.len() != ds.n_pixels() {
            return Err(Error::Config("split size does not match dataset".into()));
        }
        let mut train_counts = vec![0; ds.classes()];
        for (p, r) in roles.iter().enumerate() {
            let label = ds.labels()[p];
            match (r, label) {
                (Role::Excluded, _) => {}
                (_, 0) => {
                    return Err(Error::Config(format!(
                        "pixel {p} has no label but is marked {r:?}"
                    )))
                }
                (Role::Train, l) => train_counts[l as usize - 1] += 1,
                (Role::Test, _) => {}
            }
        }
        Ok(Self {
            roles,
            train_counts,
        })
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, p: usize) -> Role {
        self.roles[p]
    }

    pub fn train_counts(&self) -> &[usize] {
        &self.train_counts
    }

    pub fn pixels_with(&self, role: Role) -> Vec<usize> {
        (0..self.roles.len()).filter(|&p| self.roles[p] == role).collect()
    }

    /// Writes one byte per pixel: 0 excluded, 1 train, 2 test.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.roles.iter().map(|&r| r as u8).collect();
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, ds: &HsiDataset) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() != ds.n_pixels() {
            return Err(Error::SizeMismatch {
                file: path.to_path_buf(),
                expected: ds.n_pixels() as u64,
                got: bytes.len() as u64,
            });
        }
        let roles = bytes
            .iter()
            .map(|&b| match b {
                0 => Ok(Role::Excluded),
                1 => Ok(Role::Train),
                2 => Ok(Role::Test),
                _ => Err(Error::Config(format!("bad split byte {b}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_roles(ds, roles)
    }
}
