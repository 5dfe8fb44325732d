//! Triplet training of the embedding network against watershed labels.
//!
//! Each epoch embeds every vertex, reweights the graph, draws fresh seeds
//! from the training pixels, floods them with a single watershed, mines
//! triplets from the resulting labels and takes SGD steps on the triplet
//! loss under a cyclic learning rate.

mod loss;
mod schedule;

pub use loss::{triplet_loss, TripletLoss};
pub use schedule::{cyclic_lr, CyclicLr};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify_single_detailed, mine_triplets_from, stratified_count};
use crate::data::{FeatureCube, Role, SplitMask};
use crate::error::{Error, Result};
use crate::graph::{ClassId, LabelArray, SeedSet};
use crate::graph_build::{reweight, EdgeSet};
use crate::nn::{Architecture, Mode, Model, Tensor};
use crate::rng::{stream, Stream};

/// Vertices embedded per inference call.
pub const EMBED_CHUNK: usize = 512;

/// Which watershed-labelled vertices triplets are drawn from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TripletPool {
    /// Every vertex of the graph (semi-supervised).
    #[default]
    All,
    /// Training pixels only.
    TrainOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub alpha: f64,
    /// Fraction of each training class drawn as seeds every epoch.
    pub seed_fraction: f64,
    pub lr_base: f64,
    pub lr_max: f64,
    /// Iterations per half-cycle; `None` means four epochs' worth.
    pub cycle_len: Option<usize>,
    pub embed_dim: usize,
    pub patch_size: usize,
    pub arch: Architecture,
    pub seed: u64,
    pub patience: usize,
    pub loss_tolerance: f64,
    pub triplet_pool: TripletPool,
    /// Draw seeds once and reuse them every epoch.
    pub fixed_seeds: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 256,
            alpha: 0.2,
            seed_fraction: 0.4,
            lr_base: 0.01,
            lr_max: 0.1,
            cycle_len: None,
            embed_dim: 64,
            patch_size: 11,
            arch: Architecture::mlp(),
            seed: 0,
            patience: 5,
            loss_tolerance: 1e-4,
            triplet_pool: TripletPool::All,
            fixed_seeds: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be a non-negative number");
        }
        if !(self.lr_base > 0.0 && self.lr_base <= self.lr_max && self.lr_max.is_finite()) {
            return bad("learning rates must satisfy 0 < lr_base <= lr_max");
        }
        if !(self.seed_fraction > 0.0 && self.seed_fraction <= 1.0) {
            return bad("seed fraction must lie in (0, 1]");
        }
        if self.batch_size == 0 || self.embed_dim == 0 {
            return bad("batch size and embed dim must be positive");
        }
        if self.patch_size.is_multiple_of(2) {
            return bad("patch size must be odd");
        }
        if self.cycle_len == Some(0) {
            return bad("cycle length must be at least 1");
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Watershed accuracy on training pixels that were not seeds.
    pub out_of_box: f64,
    pub active_fraction: f64,
    pub n_triplets: usize,
    pub n_seeds: usize,
    pub lr: f64,
    /// Watershed produced fewer than two usable classes; SGD was skipped.
    pub degenerate: bool,
}

/// Everything the loop needs about the image besides the model.
pub struct TrainData<'a> {
    pub features: &'a FeatureCube,
    pub edges: &'a EdgeSet,
    /// Ground-truth label per pixel, 0 for unlabelled.
    pub labels: &'a [u16],
    pub split: &'a SplitMask,
}

/// Training vertices grouped by class, in vertex order.
pub fn train_vertices_by_class(data: &TrainData) -> Vec<(ClassId, Vec<usize>)> {
    let mut by_class: std::collections::BTreeMap<ClassId, Vec<usize>> = Default::default();
    for (v, &p) in data.edges.vertex_pixels.iter().enumerate() {
        if data.split.role(p) == Role::Train {
            by_class.entry(data.labels[p] as ClassId - 1).or_default().push(v);
        }
    }
    by_class.into_iter().collect()
}

/// Draws `ceil(fraction * n_c)` seeds from every class.
pub fn sample_seeds(
    by_class: &[(ClassId, Vec<usize>)],
    fraction: f64,
    rng: &mut impl rand::Rng,
) -> SeedSet {
    let mut seeds = SeedSet::new();
    for (c, members) in by_class {
        let k = stratified_count(fraction, members.len());
        for i in sample(rng, members.len(), k) {
            seeds.insert(members[i], *c);
        }
    }
    seeds
}

/// Eval-mode embeddings of the given pixels' patches, one row per pixel.
pub fn embed_pixels(
    model: &Model,
    features: &FeatureCube,
    pixels: &[usize],
    patch: usize,
) -> Result<Tensor> {
    let in_len: usize = model.input_shape().iter().product();
    let chunks: Vec<Vec<f64>> = pixels
        .par_chunks(EMBED_CHUNK)
        .map(|chunk| {
            let batch = patch_batch(model, features, chunk, patch, in_len)?;
            Ok(model.infer(&batch)?.into_data())
        })
        .collect::<Result<_>>()?;
    let d = model.output_dim();
    Tensor::new(vec![pixels.len(), d], chunks.concat())
}

fn patch_batch(
    model: &Model,
    features: &FeatureCube,
    pixels: &[usize],
    patch: usize,
    in_len: usize,
) -> Result<Tensor> {
    let expect = [features.bands, patch, patch];
    if model.input_shape() != expect {
        return Err(Error::Shape {
            layer: 0,
            expected: model.input_shape().to_vec(),
            got: expect.to_vec(),
        });
    }
    let mut data = vec![0.0; pixels.len() * in_len];
    for (i, &p) in pixels.iter().enumerate() {
        features.write_patch_chw(p, patch, &mut data[i * in_len..(i + 1) * in_len]);
    }
    let mut shape = vec![pixels.len()];
    shape.extend_from_slice(&expect);
    Tensor::new(shape, data)
}

/// Runs the training loop, calling `on_epoch` after every epoch. Returns
/// the epoch records; `model` holds the trained parameters.
pub fn train(
    data: &TrainData,
    model: &mut Model,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord) -> Result<()>,
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    if cfg.epochs == 0 {
        return Ok(records);
    }
    let by_class = train_vertices_by_class(data);
    if by_class.len() < 2 {
        return Err(Error::TooFewClasses(by_class.len()));
    }
    let n_classes = data.labels.iter().copied().max().unwrap_or(0) as usize;
    if let Some(c) = (0..n_classes as ClassId).find(|c| by_class.iter().all(|(k, _)| k != c)) {
        return Err(Error::ClassWithoutSeeds(c));
    }
    let train_truth: Vec<(usize, ClassId)> = by_class
        .iter()
        .flat_map(|(c, vs)| vs.iter().map(move |&v| (v, *c)))
        .collect();
    let pool: Vec<usize> = match cfg.triplet_pool {
        TripletPool::All => (0..data.edges.n_vertices()).collect(),
        TripletPool::TrainOnly => {
            let mut p: Vec<usize> = train_truth.iter().map(|&(v, _)| v).collect();
            p.sort_unstable();
            p
        }
    };
    let iters_per_epoch = pool.len().div_ceil(cfg.batch_size);
    let schedule = CyclicLr {
        base: cfg.lr_base,
        max: cfg.lr_max,
        half_cycle: cfg.cycle_len.unwrap_or(4 * iters_per_epoch),
    };

    let mut graph = data.edges.to_graph()?;
    let mut iteration = 0usize;
    let mut streak = 0usize;
    for epoch in 0..cfg.epochs {
        model.set_mode(Mode::Eval);
        let emb = embed_pixels(model, data.features, &data.edges.vertex_pixels, cfg.patch_size)?;
        reweight(&mut graph, &emb)?;
        let seed_index = if cfg.fixed_seeds { 0 } else { epoch as u64 };
        let seeds = sample_seeds(
            &by_class,
            cfg.seed_fraction,
            &mut stream(cfg.seed, Stream::Seeds, seed_index),
        );
        let labels = classify_single_detailed(&graph, &seeds)?.labels;
        let out_of_box = out_of_box_accuracy(&labels, &train_truth, &seeds);

        let mut rng = stream(cfg.seed, Stream::Mining, epoch as u64);
        let mut loss_sum = 0.0;
        let mut active = 0usize;
        let mut n_triplets = 0usize;
        let mut degenerate = false;
        let mut lr = cyclic_lr(iteration, &schedule);
        model.set_mode(Mode::Train);
        for step in 0..iters_per_epoch {
            let batch = match mine_triplets_from(&labels, &pool, cfg.batch_size, &mut rng) {
                Ok(b) => b,
                Err(Error::TooFewClasses(_)) | Err(Error::Config(_)) if step == 0 => {
                    degenerate = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            if batch.is_empty() {
                continue;
            }
            lr = cyclic_lr(iteration, &schedule);
            let (sum, n_active) = sgd_step(model, data, &graph_pixels(data, &batch), cfg, lr)
                .map_err(|e| match e {
                    Error::NonFinite(what) => {
                        Error::NonFinite(format!("{what} at epoch {epoch}, step {step}, lr {lr}"))
                    }
                    e => e,
                })?;
            loss_sum += sum;
            active += n_active;
            n_triplets += batch.len();
            iteration += 1;
        }
        let mean_loss = if n_triplets > 0 { loss_sum / n_triplets as f64 } else { 0.0 };
        let record = EpochRecord {
            epoch,
            mean_loss,
            out_of_box,
            active_fraction: if n_triplets > 0 { active as f64 / n_triplets as f64 } else { 0.0 },
            n_triplets,
            n_seeds: seeds.len(),
            lr,
            degenerate,
        };
        on_epoch(&record)?;
        records.push(record);
        if !degenerate && out_of_box == 1.0 && mean_loss < cfg.loss_tolerance {
            streak += 1;
            if streak >= cfg.patience {
                break;
            }
        } else {
            streak = 0;
        }
    }
    model.set_mode(Mode::Eval);
    Ok(records)
}

/// Fraction of non-seed training vertices whose watershed label matches
/// the truth; 1 when every training vertex is a seed.
pub fn out_of_box_accuracy(
    labels: &LabelArray,
    train_truth: &[(usize, ClassId)],
    seeds: &SeedSet,
) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for &(v, c) in train_truth {
        if seeds.get(v).is_none() {
            total += 1;
            hit += usize::from(labels.get(v) == Some(c));
        }
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

/// Pixel ids of anchors, then positives, then negatives.
fn graph_pixels(data: &TrainData, batch: &crate::classifier::TripletBatch) -> Vec<usize> {
    let vp = &data.edges.vertex_pixels;
    batch
        .anchors
        .iter()
        .chain(&batch.positives)
        .chain(&batch.negatives)
        .map(|&v| vp[v])
        .collect()
}

/// One SGD step on the mean triplet loss. Returns the summed loss and the
/// number of active triplets.
fn sgd_step(
    model: &mut Model,
    data: &TrainData,
    pixels: &[usize],
    cfg: &TrainConfig,
    lr: f64,
) -> Result<(f64, usize)> {
    let in_len: usize = model.input_shape().iter().product();
    let input = patch_batch(model, data.features, pixels, cfg.patch_size, in_len)?;
    let out = model.forward(&input)?;
    let b = pixels.len() / 3;
    let d = model.output_dim();
    let mut upstream = vec![0.0; 3 * b * d];
    let mut loss_sum = 0.0;
    let mut active = 0;
    let scale = 1.0 / b as f64;
    for i in 0..b {
        let l = triplet_loss(out.row(i), out.row(b + i), out.row(2 * b + i), cfg.alpha)?;
        loss_sum += l.loss;
        if !l.active() {
            continue;
        }
        active += 1;
        for (k, g) in [&l.grad_anchor, &l.grad_positive, &l.grad_negative].iter().enumerate() {
            let row = &mut upstream[(k * b + i) * d..(k * b + i + 1) * d];
            row.iter_mut().zip(g.iter()).for_each(|(u, g)| *u = g * scale);
        }
    }
    if !loss_sum.is_finite() {
        return Err(Error::NonFinite("triplet loss".into()));
    }
    let grads = model.backward_params(&Tensor::new(vec![3 * b, d], upstream)?)?;
    for (p, g) in model.params_mut().iter_mut().zip(&grads) {
        *p -= lr * g;
    }
    if !model.params().iter().all(|p| p.is_finite()) {
        return Err(Error::NonFinite("parameters after SGD step".into()));
    }
    Ok((loss_sum, active))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_synthetic, split, SplitMode, SynthConfig};
    use crate::graph_build::build_edge_set_from_features;
    use crate::nn::build_model;

    fn small_run(cfg: &TrainConfig) -> (Model, Vec<EpochRecord>) {
        let ds = make_synthetic(&SynthConfig {
            height: 16,
            width: 16,
            bands: 4,
            classes: 3,
            ..Default::default()
        })
        .unwrap();
        let features = FeatureCube::from_dataset(&ds);
        let edges = build_edge_set_from_features(&ds, &features, 4).unwrap();
        let mask = split(&ds, SplitMode::Fraction { fraction: 0.2 }, 3).unwrap();
        let data = TrainData {
            features: &features,
            edges: &edges,
            labels: ds.labels(),
            split: &mask,
        };
        let arch = Architecture::Mlp { hidden: vec![16] };
        let mut model = build_model(&arch, 4, cfg.patch_size, cfg.embed_dim, 5).unwrap();
        let records = train(&data, &mut model, cfg, |_| Ok(())).unwrap();
        (model, records)
    }

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 64,
            embed_dim: 8,
            patch_size: 3,
            seed: 2,
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_leaves_model() {
        let (model, records) = small_run(&cfg(0));
        let fresh = build_model(&Architecture::Mlp { hidden: vec![16] }, 4, 3, 8, 5).unwrap();
        assert!(records.is_empty());
        assert_eq!(model.params(), fresh.params());
    }

    #[test]
    fn deterministic_records() {
        let (m1, r1) = small_run(&cfg(3));
        let (m2, r2) = small_run(&cfg(3));
        assert_eq!(r1, r2);
        assert_eq!(m1.params(), m2.params());
        assert_eq!(r1.len(), 3);
        for r in &r1 {
            assert!((0.0..=1.0).contains(&r.out_of_box));
            assert!(r.n_seeds > 0 && r.n_triplets > 0);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(1);
        c.lr_base = 0.5;
        assert!(c.validate().is_err());
        let mut c = cfg(1);
        c.patch_size = 4;
        assert!(c.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
