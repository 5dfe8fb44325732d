use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{euclidean_mst, PcaBasis, WEIGHT_FLOOR};
use crate::data::{FeatureCube, HsiDataset};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};

/// Where an edge of the combined set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Adjacency,
    Emst,
    Both,
}

/// Fixed edge set over the labelled pixels of an image.
///
/// Vertex `i` is pixel `vertex_pixels[i]`; labelled pixels are numbered in
/// row-major order. Edge pairs are vertex ids with `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet {
    pub width: usize,
    pub vertex_pixels: Vec<usize>,
    pub adjacency_edges: Vec<(usize, usize)>,
    pub emst_edges: Vec<(usize, usize)>,
    /// Union of both lists, sorted, no duplicates.
    pub combined: Vec<(usize, usize)>,
    pub provenance: Vec<Provenance>,
    /// Feature-space length of each combined edge, floored at the weight clamp.
    pub feature_lengths: Vec<f64>,
}

/// Summary printed by `twshed graph-stats`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_vertices: usize,
    pub n_adjacency_edges: usize,
    pub n_emst_edges: usize,
    pub n_combined: usize,
    pub n_connected_components: usize,
    /// Components containing no seed vertex.
    pub orphan_components: usize,
}

/// Builds the edge set from the first `emst_dims` PCA coordinates.
pub fn build_edge_set(ds: &HsiDataset, pca: &PcaBasis, emst_dims: usize) -> Result<EdgeSet> {
    if emst_dims == 0 || emst_dims > pca.k() {
        return Err(Error::Config(format!(
            "emst_dims {emst_dims} outside 1..={}",
            pca.k()
        )));
    }
    let features = pca.project_dataset(ds, emst_dims)?;
    build_edge_set_from_features(ds, &features, emst_dims)
}

/// Builds the edge set using the first `emst_dims` channels of `features`
/// for the EMST.
pub fn build_edge_set_from_features(
    ds: &HsiDataset,
    features: &FeatureCube,
    emst_dims: usize,
) -> Result<EdgeSet> {
    if features.height != ds.height() || features.width != ds.width() {
        return Err(Error::Config("feature cube does not match the image".into()));
    }
    if emst_dims == 0 || emst_dims > features.bands {
        return Err(Error::Config(format!(
            "emst_dims {emst_dims} outside 1..={}",
            features.bands
        )));
    }
    let (h, w) = (ds.height(), ds.width());
    let vertex_pixels = ds.labeled_pixels();
    if vertex_pixels.is_empty() {
        return Err(Error::NoLabeledPixels);
    }
    let mut vertex_of = vec![usize::MAX; h * w];
    for (i, &p) in vertex_pixels.iter().enumerate() {
        vertex_of[p] = i;
    }

    let mut adjacency_edges = Vec::new();
    for (i, &p) in vertex_pixels.iter().enumerate() {
        let (r, c) = (p / w, p % w);
        if c + 1 < w && vertex_of[p + 1] != usize::MAX {
            adjacency_edges.push((i, vertex_of[p + 1]));
        }
        if r + 1 < h && vertex_of[p + w] != usize::MAX {
            adjacency_edges.push((i, vertex_of[p + w]));
        }
    }

    let mut points = Vec::with_capacity(vertex_pixels.len() * emst_dims);
    for &p in &vertex_pixels {
        points.extend_from_slice(&features.pixel(p)[..emst_dims]);
    }
    let emst = euclidean_mst(&points, emst_dims);
    let emst_edges: Vec<(usize, usize)> = emst.iter().map(|&(u, v, _)| (u, v)).collect();

    let mut merged: BTreeMap<(usize, usize), Provenance> = BTreeMap::new();
    for &e in &adjacency_edges {
        merged.insert(e, Provenance::Adjacency);
    }
    for &e in &emst_edges {
        merged
            .entry(e)
            .and_modify(|p| *p = Provenance::Both)
            .or_insert(Provenance::Emst);
    }
    let (combined, provenance): (Vec<_>, Vec<_>) = merged.into_iter().unzip();
    let feature_lengths = combined
        .iter()
        .map(|&(u, v)| {
            let a = features.pixel(vertex_pixels[u]);
            let b = features.pixel(vertex_pixels[v]);
            super::squared_distance(a, b).sqrt().max(WEIGHT_FLOOR)
        })
        .collect();

    Ok(EdgeSet {
        width: w,
        vertex_pixels,
        adjacency_edges,
        emst_edges,
        combined,
        provenance,
        feature_lengths,
    })
}

impl EdgeSet {
    pub fn n_vertices(&self) -> usize {
        self.vertex_pixels.len()
    }

    /// Image coordinates `(row, col)` of a vertex.
    pub fn coords(&self, vertex: usize) -> (usize, usize) {
        let p = self.vertex_pixels[vertex];
        (p / self.width, p % self.width)
    }

    /// Graph over the combined edges, weighted by feature-space length.
    pub fn to_graph(&self) -> Result<Graph> {
        let edges: Vec<Edge> = self
            .combined
            .iter()
            .zip(&self.feature_lengths)
            .map(|(&(u, v), &w)| Edge::new(u, v, w))
            .collect();
        Graph::new(self.n_vertices(), &edges)
    }

    /// Pixel index to vertex id, `None` for unlabelled pixels.
    pub fn vertex_of_pixel(&self) -> Vec<Option<usize>> {
        let n = self.vertex_pixels.last().map_or(0, |&p| p + 1);
        let mut out = vec![None; n];
        for (i, &p) in self.vertex_pixels.iter().enumerate() {
            out[p] = Some(i);
        }
        out
    }

    /// Statistics; `seeds` lists the vertices that carry a seed label.
    pub fn stats(&self, seeds: &[usize]) -> Result<GraphStats> {
        let g = self.to_graph()?;
        let (n_components, component) = g.connected_components();
        let mut seeded = vec![false; n_components];
        for &s in seeds {
            if s >= self.n_vertices() {
                return Err(Error::VertexOutOfRange {
                    vertex: s,
                    n_vertices: self.n_vertices(),
                });
            }
            seeded[component[s]] = true;
        }
        Ok(GraphStats {
            n_vertices: self.n_vertices(),
            n_adjacency_edges: self.adjacency_edges.len(),
            n_emst_edges: self.emst_edges.len(),
            n_combined: self.combined.len(),
            n_connected_components: n_components,
            orphan_components: seeded.iter().filter(|s| !**s).count(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(h: usize, w: usize, labels: Vec<u16>, values: Vec<f32>) -> HsiDataset {
        HsiDataset::new(h, w, 1, 2, values, labels).unwrap()
    }

    #[test]
    fn one_by_three() {
        let ds = dataset(1, 3, vec![1, 1, 2], vec![0.0, 1.0, 5.0]);
        let f = FeatureCube::from_dataset(&ds);
        let es = build_edge_set_from_features(&ds, &f, 1).unwrap();
        assert_eq!(es.adjacency_edges, vec![(0, 1), (1, 2)]);
        assert_eq!(es.emst_edges.len(), 2);
        assert_eq!(es.combined, vec![(0, 1), (1, 2)]);
        assert_eq!(es.provenance, vec![Provenance::Both; 2]);
        assert_eq!(es.feature_lengths, vec![1.0, 4.0]);
    }

    #[test]
    fn single_labelled_pixel() {
        let ds = dataset(2, 2, vec![0, 0, 1, 0], vec![0.0, 1.0, 2.0, 3.0]);
        let es = build_edge_set_from_features(&ds, &FeatureCube::from_dataset(&ds), 1).unwrap();
        assert_eq!(es.n_vertices(), 1);
        assert!(es.adjacency_edges.is_empty() && es.emst_edges.is_empty());
        assert_eq!(es.coords(0), (1, 0));
        let stats = es.stats(&[0]).unwrap();
        assert_eq!((stats.n_connected_components, stats.orphan_components), (1, 0));
    }

    #[test]
    fn unlabelled_pixels_break_adjacency() {
        // 2x2 with the top-right pixel unlabelled.
        let ds = dataset(2, 2, vec![1, 0, 1, 2], vec![0.0, 0.0, 0.0, 10.0]);
        let es = build_edge_set_from_features(&ds, &FeatureCube::from_dataset(&ds), 1).unwrap();
        assert_eq!(es.vertex_pixels, vec![0, 2, 3]);
        assert_eq!(es.adjacency_edges, vec![(0, 1), (1, 2)]);
        for &(u, v) in &es.adjacency_edges {
            let ((r1, c1), (r2, c2)) = (es.coords(u), es.coords(v));
            assert_eq!(r1.abs_diff(r2) + c1.abs_diff(c2), 1);
        }
        assert_eq!(es.vertex_of_pixel(), vec![Some(0), None, Some(1), Some(2)]);
    }

    #[test]
    fn empty_vertex_set_errors() {
        let r = HsiDataset::new(1, 2, 1, 2, vec![0.0, 1.0], vec![0, 0]);
        assert!(matches!(r, Err(Error::NoLabeledPixels)));
    }
}
