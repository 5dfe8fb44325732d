//! Watershed classification as used for training and inference, plus
//! triplet mining from watershed labels.

mod ensemble;
mod mining;

pub use ensemble::{classify_ensemble, EnsembleConfig, Votes};
pub use mining::{mine_triplets, mine_triplets_from, TripletBatch, MAX_ANCHOR_RETRIES};

use crate::error::Result;
use crate::graph::{label_orphans, watershed_label_weighted, Graph, LabelArray, Orphans, SeedSet};

/// Single watershed followed by orphan resolution.
pub fn classify_single(g: &Graph, seeds: &SeedSet) -> Result<LabelArray> {
    Ok(classify_single_detailed(g, seeds)?.labels)
}

/// Like [`classify_single`] but reports how orphans were handled.
pub fn classify_single_detailed(g: &Graph, seeds: &SeedSet) -> Result<Orphans> {
    classify_weighted(g, g.weights(), seeds)
}

pub(crate) fn classify_weighted(g: &Graph, weights: &[f64], seeds: &SeedSet) -> Result<Orphans> {
    let ws = watershed_label_weighted(g, weights, seeds)?;
    // Every seed-reachable vertex is labelled by the union phase, so the
    // graph's own weights are as good as `weights` for the orphan search.
    label_orphans(g, &ws.labels, seeds)
}

/// `ceil(fraction * n)`, at least 1, tolerant of float noise at exact
/// multiples.
pub fn stratified_count(fraction: f64, n: usize) -> usize {
    (((fraction * n as f64) - 1e-9).ceil() as usize).clamp(1, n.max(1))
}
