//! Edge-weighted graphs and the watershed classifier.

mod dump;
mod margin;
mod pass_value;
mod union_find;
mod watershed;

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};

pub use margin::{brute_force_max_margin, partition_margin, MaxMargin, BRUTE_FORCE_LIMIT};
pub use pass_value::{
    minimum_spanning_forest, pass_value, set_dissimilarity, PassValue, PassValueIndex,
};
pub use union_find::UnionFind;
pub use watershed::{label_orphans, watershed_label, watershed_label_weighted, Orphans, Watershed};

pub type ClassId = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, w: f64) -> Self {
        Self { u, v, w }
    }
}

/// Undirected graph with strictly positive edge weights.
///
/// The edge list is fixed at construction; only weights may change
/// afterwards, through [`Graph::set_weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    endpoints: Vec<(usize, usize)>,
    weights: Vec<f64>,
    adj_offsets: Vec<usize>,
    /// `(neighbor, edge index)` pairs grouped by vertex.
    adj: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: &[Edge]) -> Result<Self> {
        let endpoints = edges.iter().map(|e| (e.u, e.v)).collect();
        let weights = edges.iter().map(|e| e.w).collect();
        Self::from_parts(n_vertices, endpoints, weights)
    }

    pub fn from_parts(
        n_vertices: usize,
        endpoints: Vec<(usize, usize)>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if endpoints.len() != weights.len() {
            return Err(Error::InvalidGraph(format!(
                "{} edges but {} weights",
                endpoints.len(),
                weights.len()
            )));
        }
        let mut seen = HashSet::with_capacity(endpoints.len());
        for &(u, v) in &endpoints {
            for x in [u, v] {
                if x >= n_vertices {
                    return Err(Error::VertexOutOfRange {
                        vertex: x,
                        n_vertices,
                    });
                }
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
        }
        check_weights(&weights)?;
        let mut degree = vec![0usize; n_vertices + 1];
        for &(u, v) in &endpoints {
            degree[u + 1] += 1;
            degree[v + 1] += 1;
        }
        for i in 0..n_vertices {
            degree[i + 1] += degree[i];
        }
        let adj_offsets = degree;
        let mut fill = adj_offsets.clone();
        let mut adj = vec![(0, 0); 2 * endpoints.len()];
        for (e, &(u, v)) in endpoints.iter().enumerate() {
            adj[fill[u]] = (v, e);
            fill[u] += 1;
            adj[fill[v]] = (u, e);
            fill[v] += 1;
        }
        Ok(Self {
            n: n_vertices,
            endpoints,
            weights,
            adj_offsets,
            adj,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.endpoints.len()
    }

    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.endpoints
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edge(&self, i: usize) -> Edge {
        let (u, v) = self.endpoints[i];
        Edge::new(u, v, self.weights[i])
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n_edges()).map(|i| self.edge(i))
    }

    /// `(neighbor, edge index)` pairs of `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    /// Replaces all edge weights. The edge set is untouched.
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::InvalidGraph(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        check_weights(&weights)?;
        self.weights = weights;
        Ok(())
    }

    /// Number of connected components and a dense component id per vertex.
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        let mut uf = UnionFind::new(self.n);
        for &(u, v) in &self.endpoints {
            uf.union(u, v);
        }
        dense_roots(&mut uf, self.n)
    }
}

pub(crate) fn check_weights(weights: &[f64]) -> Result<()> {
    match weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        Some(i) => Err(Error::InvalidGraph(format!(
            "edge {i} has weight {}; weights must be finite and positive",
            weights[i]
        ))),
        None => Ok(()),
    }
}

/// Component ids numbered by first appearance in vertex order.
pub(crate) fn dense_roots(uf: &mut UnionFind, n: usize) -> (usize, Vec<usize>) {
    let mut ids = vec![usize::MAX; n];
    let mut comp = Vec::with_capacity(n);
    let mut count = 0;
    for v in 0..n {
        let r = uf.find(v);
        if ids[r] == usize::MAX {
            ids[r] = count;
            count += 1;
        }
        comp.push(ids[r]);
    }
    (count, comp)
}

/// Labelled vertices: vertex id to class id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedSet(BTreeMap<usize, ClassId>);

impl SeedSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a seed set; a vertex listed twice must carry the same class.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, ClassId)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (v, c) in pairs {
            if let Some(prev) = map.insert(v, c) {
                if prev != c {
                    return Err(Error::Config(format!(
                        "vertex {v} seeded with classes {prev} and {c}"
                    )));
                }
            }
        }
        Ok(Self(map))
    }

    pub fn insert(&mut self, vertex: usize, class: ClassId) {
        self.0.insert(vertex, class);
    }

    pub fn get(&self, vertex: usize) -> Option<ClassId> {
        self.0.get(&vertex).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(vertex, class)` in ascending vertex order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, ClassId)> + '_ {
        self.0.iter().map(|(&v, &c)| (v, c))
    }

    /// Distinct classes, ascending.
    pub fn classes(&self) -> Vec<ClassId> {
        let mut c: Vec<_> = self.0.values().copied().collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Seed vertices grouped by class.
    pub fn by_class(&self) -> BTreeMap<ClassId, Vec<usize>> {
        let mut out: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
        for (v, c) in self.iter() {
            out.entry(c).or_default().push(v);
        }
        out
    }

    pub(crate) fn check_range(&self, n_vertices: usize) -> Result<()> {
        match self.0.keys().next_back() {
            Some(&v) if v >= n_vertices => Err(Error::VertexOutOfRange { vertex: v, n_vertices }),
            _ => Ok(()),
        }
    }
}

/// Dense per-vertex labels; `None` is unlabelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelArray(Vec<Option<ClassId>>);

impl LabelArray {
    pub fn unlabeled(n: usize) -> Self {
        Self(vec![None; n])
    }

    pub fn from_vec(labels: Vec<Option<ClassId>>) -> Self {
        Self(labels)
    }

    pub fn get(&self, v: usize) -> Option<ClassId> {
        self.0[v]
    }

    pub fn set(&mut self, v: usize, label: Option<ClassId>) {
        self.0[v] = label;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Option<ClassId>] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Option<ClassId>> {
        self.0
    }

    pub fn unlabeled_count(&self) -> usize {
        self.0.iter().filter(|l| l.is_none()).count()
    }

    /// Distinct labels present, ascending.
    pub fn classes(&self) -> Vec<ClassId> {
        let mut c: Vec<_> = self.0.iter().flatten().copied().collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}
