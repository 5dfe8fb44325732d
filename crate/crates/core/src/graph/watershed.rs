use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{check_weights, dense_roots, ClassId, Graph, LabelArray, SeedSet, UnionFind};
use crate::error::{Error, Result};

/// Output of the union phase: labels plus the component each vertex ended in.
#[derive(Debug, Clone, PartialEq)]
pub struct Watershed {
    pub labels: LabelArray,
    /// Dense component id per vertex after the union phase.
    pub components: Vec<usize>,
    pub n_components: usize,
}

/// Seeded watershed over the graph's current weights.
pub fn watershed_label(g: &Graph, seeds: &SeedSet) -> Result<Watershed> {
    watershed_label_weighted(g, g.weights(), seeds)
}

/// Seeded watershed using `weights` in place of the graph's own.
///
/// Edges are visited in ascending `(weight, edge index)` order. An edge is
/// skipped when both endpoint components already carry a label; otherwise
/// the components are merged. Every vertex then takes the label of its
/// component, or stays unlabelled if no seed reached it.
pub fn watershed_label_weighted(g: &Graph, weights: &[f64], seeds: &SeedSet) -> Result<Watershed> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed set"));
    }
    seeds.check_range(g.n_vertices())?;
    if weights.len() != g.n_edges() {
        return Err(Error::InvalidGraph(format!(
            "expected {} weights, got {}",
            g.n_edges(),
            weights.len()
        )));
    }
    check_weights(weights)?;

    let n = g.n_vertices();
    let mut uf = UnionFind::new(n);
    for (v, c) in seeds.iter() {
        uf.set_label(v, c);
    }
    let mut order: Vec<usize> = (0..g.n_edges()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    for e in order {
        let (u, v) = g.endpoints()[e];
        if uf.label(u).is_some() && uf.label(v).is_some() {
            continue;
        }
        uf.union(u, v);
    }
    let labels = LabelArray::from_vec((0..n).map(|v| uf.label(v)).collect());
    let (n_components, components) = dense_roots(&mut uf, n);
    Ok(Watershed {
        labels,
        components,
        n_components,
    })
}

/// Result of [`label_orphans`].
#[derive(Debug, Clone, PartialEq)]
pub struct Orphans {
    pub labels: LabelArray,
    /// Vertices that were unlabelled and got a label.
    pub resolved: usize,
    /// Vertices with no path to any seed; they stay unlabelled.
    pub unresolved: Vec<usize>,
}

/// Gives every unlabelled vertex the label of the seed with the smallest
/// pass value to it, ties going to the lowest class id and then the lowest
/// seed vertex. Vertices with no path to a seed remain unlabelled.
pub fn label_orphans(g: &Graph, labels: &LabelArray, seeds: &SeedSet) -> Result<Orphans> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed set"));
    }
    seeds.check_range(g.n_vertices())?;
    if labels.unlabeled_count() == 0 {
        return Ok(Orphans {
            labels: labels.clone(),
            resolved: 0,
            unresolved: Vec::new(),
        });
    }
    // Multi-source minimax search keyed by (pass value, class, seed).
    let n = g.n_vertices();
    let mut best: Vec<Option<(f64, ClassId, usize)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    for (v, c) in seeds.iter() {
        let key = (0.0, c, v);
        if best[v].is_none_or(|b| cmp_key(&key, &b).is_lt()) {
            best[v] = Some(key);
            heap.push(Reverse(Key(key, v)));
        }
    }
    while let Some(Reverse(Key(key, v))) = heap.pop() {
        if best[v] != Some(key) {
            continue;
        }
        for &(u, e) in g.neighbors(v) {
            let cand = (key.0.max(g.weights()[e]), key.1, key.2);
            if best[u].is_none_or(|b| cmp_key(&cand, &b).is_lt()) {
                best[u] = Some(cand);
                heap.push(Reverse(Key(cand, u)));
            }
        }
    }
    let mut out = labels.clone();
    let mut resolved = 0;
    let mut unresolved = Vec::new();
    for v in 0..n {
        if out.get(v).is_some() {
            continue;
        }
        match best[v] {
            Some((_, c, _)) => {
                out.set(v, Some(c));
                resolved += 1;
            }
            None => unresolved.push(v),
        }
    }
    Ok(Orphans {
        labels: out,
        resolved,
        unresolved,
    })
}

fn cmp_key(a: &(f64, ClassId, usize), b: &(f64, ClassId, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key((f64, ClassId, usize), usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        cmp_key(&self.0, &other.0).then(self.1.cmp(&other.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn path() -> Graph {
        Graph::new(3, &[Edge::new(0, 1, 1.0), Edge::new(1, 2, 2.0)]).unwrap()
    }

    #[test]
    fn path_graph_example() {
        let seeds = SeedSet::from_pairs([(0, 0), (2, 1)]).unwrap();
        let ws = watershed_label(&path(), &seeds).unwrap();
        assert_eq!(ws.labels.as_slice(), &[Some(0), Some(0), Some(1)]);
        assert_eq!(ws.n_components, 2);
        assert_eq!(ws.components, vec![0, 0, 1]);
    }

    #[test]
    fn single_vertex() {
        let g = Graph::new(1, &[]).unwrap();
        let ws = watershed_label(&g, &SeedSet::from_pairs([(0, 7)]).unwrap()).unwrap();
        assert_eq!(ws.labels.as_slice(), &[Some(7)]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            watershed_label(&path(), &SeedSet::new()),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            watershed_label(&path(), &SeedSet::from_pairs([(3, 0)]).unwrap()),
            Err(Error::VertexOutOfRange { vertex: 3, .. })
        ));
    }

    #[test]
    fn equal_weights_break_ties_by_edge_index() {
        // Middle vertex 1 is equidistant; edge 0 (to seed 0) comes first.
        let g = Graph::new(3, &[Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap();
        let seeds = SeedSet::from_pairs([(0, 0), (2, 1)]).unwrap();
        let ws = watershed_label(&g, &seeds).unwrap();
        assert_eq!(ws.labels.get(1), Some(0));
        let g = Graph::new(3, &[Edge::new(1, 2, 1.0), Edge::new(0, 1, 1.0)]).unwrap();
        assert_eq!(watershed_label(&g, &seeds).unwrap().labels.get(1), Some(1));
    }

    #[test]
    fn orphans_without_path_stay_unlabelled() {
        // Components {0,1} and {2,3}, plus isolated 4; seed only in the first.
        let g = Graph::new(5, &[Edge::new(0, 1, 1.0), Edge::new(2, 3, 1.0)]).unwrap();
        let seeds = SeedSet::from_pairs([(0, 2)]).unwrap();
        let ws = watershed_label(&g, &seeds).unwrap();
        assert_eq!(ws.labels.unlabeled_count(), 3);
        let fixed = label_orphans(&g, &ws.labels, &seeds).unwrap();
        assert_eq!(fixed.resolved, 0);
        assert_eq!(fixed.unresolved, vec![2, 3, 4]);
        assert_eq!(fixed.labels, ws.labels);
    }

    #[test]
    fn orphans_take_nearest_seed_by_pass_value() {
        // Hand-built partial labelling: 1 and 3 unlabelled.
        let g = Graph::new(
            4,
            &[Edge::new(0, 1, 2.0), Edge::new(1, 2, 3.0), Edge::new(2, 3, 1.0)],
        )
        .unwrap();
        let seeds = SeedSet::from_pairs([(0, 1), (2, 0)]).unwrap();
        let partial = LabelArray::from_vec(vec![Some(1), None, Some(0), None]);
        let fixed = label_orphans(&g, &partial, &seeds).unwrap();
        assert_eq!(fixed.labels.as_slice(), &[Some(1), Some(1), Some(0), Some(0)]);
        assert_eq!(fixed.resolved, 2);
        // Equal pass values: lower class id wins.
        let g = Graph::new(3, &[Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap();
        let seeds = SeedSet::from_pairs([(0, 1), (2, 0)]).unwrap();
        let partial = LabelArray::from_vec(vec![Some(1), None, Some(0)]);
        assert_eq!(label_orphans(&g, &partial, &seeds).unwrap().labels.get(1), Some(0));
    }

    #[test]
    fn no_orphans_is_identity() {
        let seeds = SeedSet::from_pairs([(0, 0), (2, 1)]).unwrap();
        let ws = watershed_label(&path(), &seeds).unwrap();
        let fixed = label_orphans(&path(), &ws.labels, &seeds).unwrap();
        assert_eq!(fixed.labels, ws.labels);
        assert!(label_orphans(&path(), &ws.labels, &SeedSet::new()).is_err());
    }
}
