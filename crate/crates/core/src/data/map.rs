use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ClassId;
use crate::nn::Tensor;
use crate::rng::{self, Stream};

/// Below this many points every point is a query.
pub const MAP_FULL_BELOW: usize = 5_000;
/// Sampled query count for larger sets.
pub const DEFAULT_MAP_QUERIES: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub map: f64,
    /// Queries that contributed an AP.
    pub queries: usize,
    /// Queries skipped because no other point shares their class.
    pub skipped: usize,
}

/// Mean average precision of same-class retrieval in embedding space.
///
/// Each query ranks every other point by `exp(-distance)`, highest first,
/// ties broken by point index. AP is the mean of precision@rank over the
/// ranks holding same-class points. `queries` limits the number of query
/// points (sampled with `seed`); `None` applies the default policy.
pub fn mean_average_precision(
    embeddings: &Tensor,
    labels: &[ClassId],
    queries: Option<usize>,
    seed: u64,
) -> Result<MapReport> {
    let n = embeddings.rows();
    if labels.len() != n {
        return Err(Error::Config("one label per embedding row required".into()));
    }
    if n < 2 {
        return Err(Error::Config("MAP needs at least two points".into()));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        // Every other point is relevant, so every AP is 1.
        return Ok(MapReport {
            map: 1.0,
            queries: n,
            skipped: 0,
        });
    }
    let k = queries.unwrap_or(if n < MAP_FULL_BELOW { n } else { DEFAULT_MAP_QUERIES });
    let query_ids: Vec<usize> = if k >= n {
        (0..n).collect()
    } else {
        let mut rng = rng::stream(seed, Stream::MapQueries, 0);
        let mut v = index::sample(&mut rng, n, k).into_vec();
        v.sort_unstable();
        v
    };
    let aps: Vec<Option<f64>> = query_ids
        .par_iter()
        .map(|&q| average_precision(embeddings, labels, q))
        .collect();
    let mut sum = 0.0;
    let mut used = 0;
    for ap in aps.iter().flatten() {
        sum += ap;
        used += 1;
    }
    if used == 0 {
        return Err(Error::Config("no query has a same-class neighbour".into()));
    }
    Ok(MapReport {
        map: sum / used as f64,
        queries: used,
        skipped: aps.len() - used,
    })
}

fn average_precision(emb: &Tensor, labels: &[ClassId], q: usize) -> Option<f64> {
    let xq = emb.row(q);
    let mut ranked: Vec<(f64, usize)> = (0..emb.rows())
        .filter(|&i| i != q)
        .map(|i| {
            let d2: f64 = emb.row(i).iter().zip(xq).map(|(a, b)| (a - b) * (a - b)).sum();
            ((-d2.sqrt()).exp(), i)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &(_, i)) in ranked.iter().enumerate() {
        if labels[i] == labels[q] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}
