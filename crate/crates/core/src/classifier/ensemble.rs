use std::fmt::Write as _;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_weighted, stratified_count};
use crate::error::{Error, Result};
use crate::graph::{ClassId, Graph, LabelArray, SeedSet};
use crate::graph_build::edge_weights;
use crate::nn::Tensor;
use crate::rng::{stream, Stream};

/// Ensemble-watershed settings. Votes are uniform, one per estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_estimators: usize,
    pub seed_fraction: f64,
    pub feature_fraction: f64,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_estimators: 25,
            seed_fraction: 0.5,
            feature_fraction: 0.5,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |f: f64| f > 0.0 && f <= 1.0;
        if self.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be at least 1".into()));
        }
        if !in_unit(self.seed_fraction) || !in_unit(self.feature_fraction) {
            return Err(Error::Config("ensemble fractions must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Per-vertex vote counts, `n_vertices x n_classes` row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Votes {
    pub n_classes: usize,
    pub counts: Vec<u32>,
}

impl Votes {
    pub fn row(&self, v: usize) -> &[u32] {
        &self.counts[v * self.n_classes..(v + 1) * self.n_classes]
    }

    /// `vertex,class0,...,classC` header then one row per vertex.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("vertex");
        for c in 0..self.n_classes {
            let _ = write!(s, ",class{c}");
        }
        s.push('\n');
        for v in 0..self.counts.len() / self.n_classes.max(1) {
            let _ = write!(s, "{v}");
            for n in self.row(v) {
                let _ = write!(s, ",{n}");
            }
            s.push('\n');
        }
        s
    }
}

/// Ensemble of single watersheds, each on a stratified subset of the seeds
/// and a random subset of embedding dimensions. Final label is the vote
/// argmax, ties going to the lowest class id.
pub fn classify_ensemble(
    g: &Graph,
    embeddings: &Tensor,
    seeds: &SeedSet,
    cfg: &EnsembleConfig,
) -> Result<(LabelArray, Votes)> {
    cfg.validate()?;
    if embeddings.rows() != g.n_vertices() {
        return Err(Error::Config(format!(
            "{} embedding rows for {} vertices",
            embeddings.rows(),
            g.n_vertices()
        )));
    }
    if seeds.is_empty() {
        return Err(Error::Empty("seed set"));
    }
    seeds.check_range(g.n_vertices())?;
    let by_class = seeds.by_class();
    let n_classes = *by_class.keys().last().expect("non-empty") as usize + 1;
    if let Some(c) = (0..n_classes as ClassId).find(|c| !by_class.contains_key(c)) {
        return Err(Error::ClassWithoutSeeds(c));
    }
    let dim = embeddings.row_len();
    let n_dims = stratified_count(cfg.feature_fraction, dim);

    let runs: Vec<LabelArray> = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(cfg.seed, Stream::Ensemble, t as u64);
            let mut subset = SeedSet::new();
            for (&c, members) in &by_class {
                let k = stratified_count(cfg.seed_fraction, members.len());
                let mut picked: Vec<usize> = sample(&mut rng, members.len(), k).into_vec();
                picked.sort_unstable();
                for i in picked {
                    subset.insert(members[i], c);
                }
            }
            let mut dims = sample(&mut rng, dim, n_dims).into_vec();
            dims.sort_unstable();
            let weights = edge_weights(g.endpoints(), embeddings, Some(&dims))?;
            Ok(classify_weighted(g, &weights, &subset)?.labels)
        })
        .collect::<Result<_>>()?;

    let n = g.n_vertices();
    let mut counts = vec![0u32; n * n_classes];
    for labels in &runs {
        for (v, l) in labels.as_slice().iter().enumerate() {
            if let Some(c) = l {
                counts[v * n_classes + *c as usize] += 1;
            }
        }
    }
    let votes = Votes { n_classes, counts };
    let labels = (0..n)
        .map(|v| {
            let row = votes.row(v);
            let best = row.iter().copied().max().unwrap_or(0);
            (best > 0).then(|| row.iter().position(|&x| x == best).unwrap() as ClassId)
        })
        .collect();
    Ok((LabelArray::from_vec(labels), votes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::classify_single;
    use crate::graph::Edge;
    use crate::graph_build::reweight;
    use rand::{Rng, SeedableRng};

    fn fixture(n: usize, seed: u64) -> (Graph, Tensor, SeedSet) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push(Edge::new(rng.random_range(0..v), v, 1.0));
            let u = rng.random_range(0..v);
            if !edges.iter().any(|e| (e.u, e.v) == (u, v)) {
                edges.push(Edge::new(u, v, 1.0));
            }
        }
        let seeds = SeedSet::from_pairs((0..9).map(|v| (v * 3, (v % 3) as ClassId))).unwrap();
        (Graph::new(n, &edges).unwrap(), Tensor::from_rows(&rows).unwrap(), seeds)
    }

    #[test]
    fn degenerate_ensemble_matches_single() {
        for s in 0..5 {
            let (mut g, emb, seeds) = fixture(60, s);
            reweight(&mut g, &emb).unwrap();
            let cfg = EnsembleConfig {
                n_estimators: 1,
                seed_fraction: 1.0,
                feature_fraction: 1.0,
                seed: s,
            };
            let (labels, votes) = classify_ensemble(&g, &emb, &seeds, &cfg).unwrap();
            assert_eq!(labels, classify_single(&g, &seeds).unwrap());
            assert!(votes.counts.iter().all(|&c| c <= 1));
        }
    }

    #[test]
    fn unanimous_votes_with_one_class() {
        let (g, emb, _) = fixture(30, 2);
        let seeds = SeedSet::from_pairs([(0, 0), (5, 0)]).unwrap();
        let cfg = EnsembleConfig {
            n_estimators: 7,
            ..Default::default()
        };
        let (labels, votes) = classify_ensemble(&g, &emb, &seeds, &cfg).unwrap();
        assert!(labels.as_slice().iter().all(|l| *l == Some(0)));
        assert!(votes.counts.iter().all(|&c| c == 7));
    }

    #[test]
    fn votes_sum_and_determinism() {
        let (g, emb, seeds) = fixture(80, 3);
        let cfg = EnsembleConfig {
            n_estimators: 9,
            seed: 11,
            ..Default::default()
        };
        let a = classify_ensemble(&g, &emb, &seeds, &cfg).unwrap();
        let b = classify_ensemble(&g, &emb, &seeds, &cfg).unwrap();
        assert_eq!(a, b);
        for v in 0..80 {
            assert_eq!(a.1.row(v).iter().sum::<u32>(), 9);
            let best = *a.1.row(v).iter().max().unwrap();
            let first = a.1.row(v).iter().position(|&x| x == best).unwrap() as ClassId;
            assert_eq!(a.0.get(v), Some(first));
        }
        // Every seed keeps its own class only if it was drawn, but seeds are
        // always drawn at least once per class.
        assert!(a.0.classes().len() == 3);
    }

    #[test]
    fn missing_class_and_bad_config() {
        let (g, emb, _) = fixture(20, 4);
        let seeds = SeedSet::from_pairs([(0, 0), (1, 2)]).unwrap();
        let r = classify_ensemble(&g, &emb, &seeds, &EnsembleConfig::default());
        assert!(matches!(r, Err(Error::ClassWithoutSeeds(1))));
        let seeds = SeedSet::from_pairs([(0, 0)]).unwrap();
        let bad = EnsembleConfig {
            feature_fraction: 0.0,
            ..Default::default()
        };
        assert!(classify_ensemble(&g, &emb, &seeds, &bad).is_err());
    }

    #[test]
    fn csv_layout() {
        let v = Votes {
            n_classes: 2,
            counts: vec![3, 0, 1, 2],
        };
        assert_eq!(v.to_csv(), "vertex,class0,class1\n0,3,0\n1,1,2\n");
    }
}
