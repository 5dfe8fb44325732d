//! End-to-end runs shared by the command-line tool and the test suites:
//! feature and graph preparation, training, ensemble prediction and scoring.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{classify_ensemble, EnsembleConfig, Votes};
use crate::data::{compute_metrics, split, FeatureCube, HsiDataset, MetricsReport, SplitMask, SplitMode};
use crate::error::{Error, Result};
use crate::graph::{ClassId, LabelArray, SeedSet};
use crate::graph_build::{build_edge_set_from_features, fit_pca, reweight, EdgeSet, PcaBasis, DEFAULT_EMST_DIMS};
use crate::nn::{build_model, Model};
use crate::trainer::{embed_pixels, train, train_vertices_by_class, EpochRecord, TrainConfig, TrainData};

pub const MODEL_FILE: &str = "model.twnet";
pub const LOG_FILE: &str = "train_log.jsonl";
pub const SPLIT_FILE: &str = "split.u8";
pub const CONFIG_FILE: &str = "run_config.json";
pub const PREDICTIONS_FILE: &str = "predictions.u16";
pub const VOTES_FILE: &str = "votes.csv";
pub const RUN_CONFIG_VERSION: u32 = 1;

/// Everything that determines a run. Echoed into every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub format_version: u32,
    pub seed: u64,
    /// Principal components kept; `None` keeps every band.
    pub pca_k: Option<usize>,
    /// Leading components used for the EMST; `None` means
    /// `min(32, pca_k)`.
    pub emst_dims: Option<usize>,
    pub split: SplitMode,
    pub train: TrainConfig,
    pub ensemble: EnsembleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            format_version: RUN_CONFIG_VERSION,
            seed: 0,
            pca_k: None,
            emst_dims: None,
            split: SplitMode::Fraction { fraction: 0.1 },
            train: TrainConfig::default(),
            ensemble: EnsembleConfig::default(),
        }
    }
}

impl RunConfig {
    /// Sets the run seed and fans it out to training and the ensemble.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self.ensemble.seed = seed;
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// PCA features and the fixed edge set of one dataset.
pub struct Prepared {
    pub dataset: HsiDataset,
    pub pca: PcaBasis,
    /// Pixels projected onto the kept components.
    pub features: FeatureCube,
    pub edges: EdgeSet,
}

pub fn prepare(dataset: HsiDataset, pca_k: Option<usize>, emst_dims: Option<usize>) -> Result<Prepared> {
    let k = pca_k.unwrap_or(dataset.bands());
    if k == 0 || k > dataset.bands() {
        return Err(Error::Config(format!(
            "pca_k {k} outside 1..={}",
            dataset.bands()
        )));
    }
    let emst = emst_dims.unwrap_or(DEFAULT_EMST_DIMS.min(k));
    if emst == 0 || emst > k {
        return Err(Error::Config(format!("emst_dims {emst} outside 1..={k}")));
    }
    let pca = fit_pca(&dataset, k)?;
    let features = pca.project_dataset(&dataset, k)?;
    let edges = build_edge_set_from_features(&dataset, &features, emst)?;
    Ok(Prepared {
        dataset,
        pca,
        features,
        edges,
    })
}

impl Prepared {
    pub fn split(&self, mode: SplitMode, seed: u64) -> Result<SplitMask> {
        split(&self.dataset, mode, seed)
    }

    /// Fresh model for this dataset's feature width.
    pub fn new_model(&self, cfg: &TrainConfig) -> Result<Model> {
        build_model(&cfg.arch, self.features.bands, cfg.patch_size, cfg.embed_dim, cfg.seed)
    }

    /// Components of the graph that contain no training pixel.
    pub fn orphan_components(&self, mask: &SplitMask) -> Result<usize> {
        let seeds: Vec<usize> = self
            .edges
            .vertex_pixels
            .iter()
            .enumerate()
            .filter(|&(_, &p)| mask.role(p) == crate::data::Role::Train)
            .map(|(v, _)| v)
            .collect();
        Ok(self.edges.stats(&seeds)?.orphan_components)
    }

    pub fn train(
        &self,
        mask: &SplitMask,
        model: &mut Model,
        cfg: &TrainConfig,
        on_epoch: impl FnMut(&EpochRecord) -> Result<()>,
    ) -> Result<Vec<EpochRecord>> {
        let data = TrainData {
            features: &self.features,
            edges: &self.edges,
            labels: self.dataset.labels(),
            split: mask,
        };
        train(&data, model, cfg, on_epoch)
    }

    /// Ensemble-watershed prediction seeded with every training pixel.
    pub fn predict(
        &self,
        model: &Model,
        mask: &SplitMask,
        patch_size: usize,
        ens: &EnsembleConfig,
    ) -> Result<Prediction> {
        let emb = embed_pixels(model, &self.features, &self.edges.vertex_pixels, patch_size)?;
        let mut g = self.edges.to_graph()?;
        reweight(&mut g, &emb)?;
        let data = TrainData {
            features: &self.features,
            edges: &self.edges,
            labels: self.dataset.labels(),
            split: mask,
        };
        let seeds = SeedSet::from_pairs(
            train_vertices_by_class(&data)
                .into_iter()
                .flat_map(|(c, vs)| vs.into_iter().map(move |v| (v, c))),
        )?;
        let (labels, votes) = classify_ensemble(&g, &emb, &seeds, ens)?;
        let mut raster = vec![0u16; self.dataset.n_pixels()];
        for (v, &p) in self.edges.vertex_pixels.iter().enumerate() {
            if let Some(c) = labels.get(v) {
                raster[p] = c as u16 + 1;
            }
        }
        Ok(Prediction {
            raster,
            labels,
            votes,
        })
    }
}

/// Ensemble output over the graph vertices and as an image raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Label `c + 1` for class `c`, 0 where nothing was predicted.
    pub raster: Vec<u16>,
    pub labels: LabelArray,
    pub votes: Votes,
}

impl Prediction {
    pub fn unlabeled_vertices(&self) -> usize {
        self.labels.unlabeled_count()
    }
}

/// Scores a predicted raster on the test pixels of `mask`.
pub fn evaluate(ds: &HsiDataset, raster: &[u16], mask: &SplitMask) -> Result<MetricsReport> {
    if raster.len() != ds.n_pixels() {
        return Err(Error::Config(format!(
            "raster has {} pixels, dataset {}",
            raster.len(),
            ds.n_pixels()
        )));
    }
    let pred: Vec<Option<ClassId>> = raster
        .iter()
        .map(|&l| (l > 0).then(|| l as ClassId - 1))
        .collect();
    compute_metrics(&pred, ds.labels(), mask, ds.classes())
}

pub fn write_raster(path: &Path, raster: &[u16]) -> Result<()> {
    let bytes: Vec<u8> = raster.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_raster(path: &Path, pixels: usize) -> Result<Vec<u16>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != pixels * 2 {
        return Err(Error::SizeMismatch {
            file: path.to_path_buf(),
            expected: pixels as u64 * 2,
            got: bytes.len() as u64,
        });
    }
    Ok(bytes.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect())
}

/// Outcome of [`run`].
pub struct RunOutcome {
    pub model: Model,
    pub split: SplitMask,
    pub records: Vec<EpochRecord>,
    pub prediction: Prediction,
    pub metrics: MetricsReport,
}

/// Split, train, predict and score. With `out` set, writes the model,
/// training log, split, predictions and run config there.
pub fn run(prep: &Prepared, cfg: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let mask = prep.split(cfg.split, cfg.seed)?;
    let mut model = prep.new_model(&cfg.train)?;
    let mut log = Vec::new();
    let records = prep.train(&mask, &mut model, &cfg.train, |r| {
        serde_json::to_writer(&mut log, r)?;
        log.push(b'\n');
        Ok(())
    })?;
    model.round_to_f32();
    let prediction = prep.predict(&model, &mask, cfg.train.patch_size, &cfg.ensemble)?;
    let metrics = evaluate(&prep.dataset, &prediction.raster, &mask)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        model.save(&dir.join(MODEL_FILE), cfg.to_json())?;
        write_file(&dir.join(LOG_FILE), &log)?;
        mask.save(&dir.join(SPLIT_FILE))?;
        write_raster(&dir.join(PREDICTIONS_FILE), &prediction.raster)?;
        write_json(&dir.join(CONFIG_FILE), &cfg.to_json())?;
    }
    Ok(RunOutcome {
        model,
        split: mask,
        records,
        prediction,
        metrics,
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, s.as_bytes())
}

impl Prepared {
    /// Mean average precision of the test pixels' embeddings.
    pub fn test_map(
        &self,
        model: &Model,
        mask: &SplitMask,
        patch_size: usize,
        queries: Option<usize>,
        seed: u64,
    ) -> Result<crate::data::MapReport> {
        let pixels = mask.pixels_with(crate::data::Role::Test);
        let emb = embed_pixels(model, &self.features, &pixels, patch_size)?;
        let labels: Vec<ClassId> = pixels
            .iter()
            .map(|&p| self.dataset.labels()[p] as ClassId - 1)
            .collect();
        crate::data::mean_average_precision(&emb, &labels, queries, seed)
    }
}
